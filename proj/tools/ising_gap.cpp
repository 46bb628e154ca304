#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ising_gap/cli_reporting.hpp"

namespace {

using namespace ising_gap;

// "a:b:step" inclusive of b up to rounding.
std::vector<Temperature> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? c1 : text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw UsageError("--T-range expects a:b:step");
    double a = 0, b = 0, step = 0;
    try {
        a = std::stod(text.substr(0, c1));
        b = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        step = std::stod(text.substr(c2 + 1));
    } catch (const std::exception&) {
        throw UsageError("--T-range expects numbers a:b:step");
    }
    if (!(step > 0) || !(a > 0) || b < a) throw UsageError("--T-range needs 0 < a <= b and step > 0");
    std::vector<Temperature> out;
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) out.push_back(Temperature::finite(a + static_cast<double>(i) * step));
    return out;
}

void write_files(const CommandResult& r, const std::string& dir) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    for (const auto& [name, contents] : r.files) {
        std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
        f << contents;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact spectral-gap and canonical-path bound checks for the Ising Gibbs sampler"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::vector<std::string> temps;
    std::string range;
    std::string out_dir;
    std::uint64_t max_states = 0;
    std::uint64_t max_quadratic = 0;

    auto add_common = [&](CLI::App* sub, bool grid) {
        sub->add_option("--n", cfg.n, "lattice side")->check(CLI::PositiveNumber);
        sub->add_option("--T", temps, grid ? "temperatures (number or inf)" : "temperature (number or inf)")
            ->expected(1, grid ? -1 : 1);
        sub->add_option("--max-states", max_states, "ceiling on 2^(n^2) for linear-cost enumeration");
        sub->add_option("--max-quadratic-states", max_quadratic,
                        "ceiling on 2^(n^2) for quadratic-cost enumeration");
        sub->add_option("--out", out_dir, "directory for artifact files");
        sub->add_option("--format", cfg.format, "stdout format")->check(CLI::IsMember({"json", "csv", "table"}));
    };

    CLI::App* spectrum = app.add_subcommand("spectrum", "exact (or Lanczos extremal) spectrum");
    add_common(spectrum, false);
    spectrum->add_flag("--extremal", cfg.extremal, "Lanczos for beta1/beta_min beyond the dense ceiling");
    spectrum->add_option("--lanczos-iterations", cfg.lanczos_iterations);

    CLI::App* bounds = app.add_subcommand("bounds", "kappa, closed-form bounds and their verdicts");
    add_common(bounds, false);
    bounds->add_flag("--formulas-only", cfg.formulas_only, "closed forms only; no enumeration");

    CLI::App* compare = app.add_subcommand("compare", "gap-bound comparison over a temperature grid");
    add_common(compare, true);
    compare->add_option("--T-range", range, "a:b:step");
    compare->add_option("--n-list", cfg.n_list, "lattice sides")->expected(0, -1);
    compare->add_option("--n-max", cfg.crossover_n_max, "search limit for the crossover n");

    CLI::App* verify = app.add_subcommand("verify", "full invariant suite");
    add_common(verify, false);
    verify->add_option("--horizon", cfg.horizon, "largest step k in the decay checks")->check(CLI::PositiveNumber);
    verify->add_option("--seed", cfg.seed, "seed for sampled checks");
    verify->add_option("--samples", cfg.samples, "pair samples for sampled checks");

    CLI::App* kernel = app.add_subcommand("kernel", "dump the exact transition kernel");
    add_common(kernel, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        if (cfg.command == "verify" && cfg.format == "json" && !verify->count("--format")) cfg.format = "table";
        if (cfg.command == "compare" && !compare->count("--format")) cfg.format = "csv";
        if (max_states != 0) cfg.limits.max_states = max_states;
        if (max_quadratic != 0) cfg.limits.max_quadratic_states = max_quadratic;
        if (!temps.empty() || !range.empty()) {
            cfg.temperatures.clear();
            for (const std::string& t : temps) cfg.temperatures.push_back(Temperature::parse(t));
            if (!range.empty())
                for (const Temperature& t : parse_range(range)) cfg.temperatures.push_back(t);
        } else if (cfg.command == "compare") {
            cfg.temperatures.clear();  // compare has no default grid
        }
    } catch (const std::invalid_argument& e) {
        std::cout << detail::error_json("usage", e.what()).dump(2) << "\n";
        return kExitUsage;
    }

    const CommandResult r = run_command(cfg);
    std::cout << r.stdout_text;
    try {
        write_files(r, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "cannot write artifacts: " << e.what() << "\n";
        return kExitUsage;
    }
    return r.exit_code;
}
