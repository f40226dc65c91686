#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "subpois/subpois.hpp"

namespace subpois::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kCommands{"pmf", "pgf", "hitting", "simulate", "validate", "moments", "conditional", "jumptimes"};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw UsageError("--" + key + ": expected a number, got '" + v + "'");
    }
    if (pos != v.size()) throw UsageError("--" + key + ": expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (!(x >= 0.0) || x != std::floor(x) || x > 1.8e19) throw UsageError("--" + key + ": expected a nonnegative integer");
    return static_cast<std::uint64_t>(x);
}

int to_int(const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x != std::floor(x) || std::fabs(x) > 1e9) throw UsageError("--" + key + ": expected an integer");
    return static_cast<int>(x);
}

std::string env_name(const std::string& key) {
    std::string n = kEnvPrefix;
    for (char c : key) n += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return n;
}

std::ostream& open_output(const RunConfig& c, std::ostream& out, std::ofstream& file) {
    if (c.out.empty()) return out;
    file.open(c.out);
    if (!file) throw UsageError("cannot open output file '" + c.out + "'");
    return file;
}

void emit(const RunConfig& c, const Table& t, std::ostream& out) {
    std::ofstream file;
    auto& os = open_output(c, out, file);
    if (c.format == "json") write_json(os, t);
    else write_csv(os, t);
}

// -------------------------------------------------------------------------

int cmd_pmf(const RunConfig& c, std::ostream& out) {
    const auto p = c.params();
    const auto bell = pmf_table(p, c.t, c.kmax);
    DistTable ode;
    try {
        ode = ode_pmf(p, c.t, c.kmax);
    } catch (const AccuracyError&) {
        ode.probs.assign(bell.probs.size(), std::nan(""));
    }
    Table t{{"k", "p_k", "method", "reference", "reference_method", "abs_diff_reference", "ode", "abs_diff_ode"}, {}};
    for (int k = 0; k <= c.kmax; ++k) {
        double ref = std::nan("");
        std::string ref_method = "rejected";
        try {
            const auto r = pmf_reference(p, c.t, k);
            ref = r.value;
            ref_method = std::string(r.method);
        } catch (const CancellationLossError&) {
        }
        t.add_row({std::int64_t{k}, bell.probs[k], std::string("bell"), ref, ref_method, std::fabs(ref - bell.probs[k]),
                   ode.probs[k], std::fabs(ode.probs[k] - bell.probs[k])});
    }
    emit(c, t, out);
    return kExitOk;
}

int cmd_pgf(const RunConfig& c, std::ostream& out) {
    const auto p = c.params();
    const auto wide = pmf_table(p, c.t, kDefaultKCap);
    std::vector<double> grid;
    if (std::isfinite(c.u)) grid.push_back(c.u);
    else
        for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
    Table t{{"u", "pgf", "series", "abs_diff"}, {}};
    for (double u : grid) {
        double s = 0.0, uk = 1.0;
        for (double q : wide.probs) {
            s += q * uk;
            uk *= u;
        }
        const double g = pgf(p, u, c.t);
        t.add_row({u, g, s, std::fabs(g - s)});
    }
    emit(c, t, out);
    return kExitOk;
}

int cmd_hitting(const RunConfig& c, std::ostream& out) {
    if (c.k < 1) throw UsageError("--k must be >= 1");
    const auto p = c.params();
    const double f = eval_f(p.spec, p.lambda);
    const double smax = std::isfinite(c.smax) ? c.smax : 10.0 / f;
    if (!(smax > 0.0) || c.points < 1) throw UsageError("--smax and --points must be positive");
    const auto q = hitting_density_form(p, c.k);
    std::vector<std::string> cols{"s", "density", "survival"};
    if (c.k == 1) cols.push_back("t1_closed");
    if (c.k == 2) cols.push_back("t2_closed");
    if (p.spec.family() == Family::Linear) cols.push_back("erlang");
    Table t{cols, {}};
    const auto erl = erlang_form(c.k, p.lambda);
    for (int i = 1; i <= c.points; ++i) {
        const double s = smax * i / c.points;
        std::vector<Cell> row{s, q(s), hitting_survival(p, c.k, s)};
        if (c.k == 1) row.emplace_back(f * std::exp(-s * f));
        if (c.k == 2) row.emplace_back(hitting_density_t2(p, s));
        if (p.spec.family() == Family::Linear) row.emplace_back(erl(s));
        t.add_row(std::move(row));
    }
    emit(c, t, out);
    return kExitOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const auto p = c.params();
    SamplingPlan plan;
    plan.t = c.t;
    plan.samples = c.samples ? c.samples : 1000;
    plan.seed = c.seed;
    plan.workers = c.workers;
    try {
        plan.method = parse_method(c.method);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    if (plan.method == SamplerMethod::Bridge) throw UsageError("--method must be path, timechange or ctrw");
    if (c.n < 1) throw UsageError("--n must be >= 1");
    plan.ctrw_n = c.n;
    if (plan.method == SamplerMethod::Path && c.format == "json") {
        std::ofstream file;
        write_jsonl(open_output(c, out, file), sample_paths(p, plan));
        return kExitOk;
    }
    const auto counts = sample_counts(p, plan);
    Table t{{"sample", "count"}, {}};
    for (std::size_t i = 0; i < counts.size(); ++i)
        t.add_row({static_cast<std::int64_t>(i), static_cast<std::int64_t>(counts[i])});
    emit(c, t, out);
    return kExitOk;
}

int cmd_validate(const RunConfig& c, std::ostream& out) {
    if (c.suite != "all" && std::find(suite_names().begin(), suite_names().end(), c.suite) == suite_names().end())
        throw UsageError("unknown suite '" + c.suite + "'");
    SuiteConfig sc;
    sc.params = c.params();
    sc.t = c.t;
    sc.kmax = c.kmax;
    sc.samples = c.samples ? c.samples : 1'000'000;
    sc.seed = c.seed;
    sc.workers = c.workers;
    sc.thresholds = c.thresholds;
    const auto reports = run_suite(c.suite, sc);
    std::ofstream file;
    auto& os = open_output(c, out, file);
    if (c.format == "csv") {
        Table t{{"check", "kind", "statistic", "threshold", "sample_size", "pass"}, {}};
        for (const auto& r : reports)
            t.add_row({r.check, kind_name(r.kind), r.statistic, r.threshold, static_cast<std::int64_t>(r.sample_size),
                       std::string(r.pass ? "true" : "false")});
        write_csv(os, t);
    } else {
        os << nlohmann::json(reports).dump(2) << '\n';
    }
    return all_pass(reports) ? kExitOk : kExitValidationFailed;
}

int cmd_moments(const RunConfig& c, std::ostream& out) {
    const auto p = c.params();
    Table t{{"quantity", "value", "method"}, {}};
    const double inf = std::numeric_limits<double>::infinity();
    if (p.spec.family() == Family::Stable) {
        t.add_row({std::string("mean"), inf, std::string("infinite-moment")});
        t.add_row({std::string("variance"), inf, std::string("infinite-moment")});
    } else {
        double fm[5] = {1.0};
        for (int r = 1; r <= 4; ++r) fm[r] = factorial_moment(p, c.t, r);
        t.add_row({std::string("mean"), fm[1], std::string("factorial-moment")});
        t.add_row({std::string("variance"), fm[2] + fm[1] - fm[1] * fm[1], std::string("factorial-moment")});
        for (int r = 1; r <= 4; ++r) t.add_row({"factorial_moment_" + std::to_string(r), fm[r], std::string("bell")});
        if (p.spec.family() == Family::Tempered) {
            const double s = std::isfinite(c.s) ? c.s : c.t;
            const auto m = tempered_moments(p.spec.alpha(), p.spec.theta(), p.lambda, c.t, s);
            t.add_row({std::string("mean"), m.mean, std::string("closed-form")});
            t.add_row({std::string("variance"), m.variance, std::string("closed-form")});
            t.add_row({std::string("covariance"), m.covariance, std::string("closed-form")});
        }
        if (p.spec.family() == Family::Gamma) {
            const auto m = gamma_moments(p.lambda, c.t);
            t.add_row({std::string("mean"), m.mean, std::string("closed-form")});
            t.add_row({std::string("variance"), m.variance, std::string("closed-form")});
            t.add_row({std::string("covariance"), m.covariance(std::isfinite(c.s) ? c.s : c.t, c.t), std::string("closed-form")});
            t.add_row({std::string("integrated_mean"), m.integrated_mean, std::string("closed-form")});
            t.add_row({std::string("integrated_variance"), m.integrated_variance, std::string("closed-form")});
        }
    }
    emit(c, t, out);
    return kExitOk;
}

int cmd_conditional(const RunConfig& c, std::ostream& out) {
    const auto p = c.params();
    const double s = std::isfinite(c.s) ? c.s : 0.5 * c.t;
    std::vector<double> probs;
    std::string method = "ratio";
    for (int r = 0; r <= c.k; ++r) {
        switch (p.spec.family()) {
        case Family::Gamma:
            method = "beta-binomial";
            probs.push_back(conditional_pmf_gamma(s, c.t, r, c.k));
            break;
        case Family::Stable:
            method = "space-fractional";
            probs.push_back(conditional_pmf_spacefractional(p.spec.alpha(), p.lambda, s, c.t, r, c.k));
            break;
        default: probs.push_back(conditional_pmf_ratio(p, s, c.t, r, c.k));
        }
    }
    double sum = 0.0;
    for (double x : probs) sum += x;
    Table t{{"r", "probability", "method", "row_sum"}, {}};
    for (int r = 0; r <= c.k; ++r) t.add_row({std::int64_t{r}, probs[r], method, sum});
    emit(c, t, out);
    return kExitOk;
}

int cmd_jumptimes(const RunConfig& c, std::ostream& out) {
    if (c.sizes.empty()) throw UsageError("--sizes needs a comma-separated list of jump heights");
    const auto p = c.params();
    const auto density = [&](std::span<const double> times, std::span<const int> sizes) {
        switch (p.spec.family()) {
        case Family::Gamma: return jump_times_density_gamma(c.t, times, sizes);
        case Family::Stable: return jump_times_density_spacefractional(p.spec.alpha(), p.lambda, c.t, times, sizes);
        default: return jump_times_density(p, c.t, times, sizes);
        }
    };
    const auto r = c.sizes.size();
    std::vector<double> times(r);
    for (std::size_t j = 0; j < r; ++j) times[j] = c.t * static_cast<double>(j + 1) / static_cast<double>(r + 1);
    int k = 0;
    std::string sizes;
    for (int l : c.sizes) {
        k += l;
        sizes += (sizes.empty() ? "" : " ") + std::to_string(l);
    }
    const double d = density(times, c.sizes);
    const double mass = k <= 24 ? jump_times_total_mass(density, c.t, k) : std::nan("");
    Table t{{"sizes", "k", "density", "normalization"}, {}};
    t.add_row({sizes, std::int64_t{k}, d, mass});
    emit(c, t, out);
    return kExitOk;
}

} // namespace

ProcessParams RunConfig::params() const {
    Family fam;
    try {
        fam = parse_family(family);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    switch (fam) {
    case Family::Stable: return {BernsteinSpec::stable(alpha), lambda};
    case Family::Tempered: return {BernsteinSpec::tempered(alpha, theta), lambda};
    case Family::Gamma: return {BernsteinSpec::gamma(), lambda};
    case Family::DiracUnit: return {BernsteinSpec::dirac_unit(rate2), lambda};
    case Family::Linear: return {BernsteinSpec::linear(), lambda};
    }
    throw UsageError("unknown family");
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "family", "alpha", "theta", "rate2",  "lambda", "t",      "kmax", "samples", "seed",  "workers",
        "out",    "format", "tv-threshold", "z-threshold", "p-threshold", "k", "s", "sizes", "method", "n",
        "suite",  "u",      "smax", "points"};
    return keys;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
        const auto key = trim(line.substr(0, eq));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

RunConfig build_config(const std::string& command, const std::map<std::string, std::string>& values) {
    RunConfig c;
    c.command = command;
    if (command == "validate") c.format = "json"; // reports are JSON unless csv is asked for
    for (const auto& [key, v] : values) {
        if (key == "family") c.family = v;
        else if (key == "alpha") c.alpha = to_double(key, v);
        else if (key == "theta") c.theta = to_double(key, v);
        else if (key == "rate2") c.rate2 = to_double(key, v);
        else if (key == "lambda") c.lambda = to_double(key, v);
        else if (key == "t") c.t = to_double(key, v);
        else if (key == "kmax") c.kmax = to_int(key, v);
        else if (key == "samples") c.samples = to_uint(key, v);
        else if (key == "seed") c.seed = to_uint(key, v);
        else if (key == "workers") c.workers = static_cast<unsigned>(to_uint(key, v));
        else if (key == "out") c.out = v;
        else if (key == "format") c.format = v;
        else if (key == "tv-threshold") c.thresholds.tv = to_double(key, v);
        else if (key == "z-threshold") c.thresholds.z = to_double(key, v);
        else if (key == "p-threshold") c.thresholds.p_value = to_double(key, v);
        else if (key == "k") c.k = to_int(key, v);
        else if (key == "s") c.s = to_double(key, v);
        else if (key == "sizes") {
            std::string tok;
            std::istringstream is(v);
            while (std::getline(is, tok, ','))
                if (!trim(tok).empty()) c.sizes.push_back(to_int(key, trim(tok)));
        } else if (key == "method") c.method = v;
        else if (key == "n") c.n = to_uint(key, v);
        else if (key == "suite") c.suite = v;
        else if (key == "u") c.u = to_double(key, v);
        else if (key == "smax") c.smax = to_double(key, v);
        else if (key == "points") c.points = to_int(key, v);
        else throw UsageError("unknown key '" + key + "'");
    }
    if (c.format != "csv" && c.format != "json") throw UsageError("--format must be csv or json");
    if (c.kmax < 0 || c.kmax > kDefaultKCap) throw UsageError("--kmax must lie in [0, " + std::to_string(kDefaultKCap) + "]");
    if (!(c.t > 0.0)) throw UsageError("--t must be > 0");
    return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Subordinated Poisson processes: distributions, hitting times, simulation and validation", "subpois"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every command");

    std::map<std::string, std::string> flag_values;
    std::string config_path;
    app.add_option("--config", config_path, "Plain-text key=value file merged under the flags");
    const std::map<std::string, std::string> help{
        {"family", "stable | tempered | gamma | dirac | linear"},
        {"alpha", "Stability index in (0,1) (stable, tempered)"},
        {"theta", "Tempering parameter > 0 (tempered)"},
        {"rate2", "Jump rate of the subordinator (dirac)"},
        {"lambda", "Rate of the base Poisson process"},
        {"t", "Time horizon"},
        {"kmax", "Largest state in pmf tables"},
        {"samples", "Monte Carlo sample size (simulate: 1000, validate: 1000000)"},
        {"seed", "Base RNG seed"},
        {"workers", "Worker threads (0: all cores); results do not depend on it"},
        {"out", "Output file (default stdout)"},
        {"format", "csv | json"},
        {"tv-threshold", "Total-variation pass threshold"},
        {"z-threshold", "|z| pass threshold"},
        {"p-threshold", "Chi-square p-value pass threshold"},
        {"k", "Level (hitting) or conditioning count (conditional)"},
        {"s", "Intermediate time (conditional, moments covariance)"},
        {"sizes", "Comma-separated jump heights (jumptimes)"},
        {"method", "path | timechange | ctrw (simulate)"},
        {"n", "CTRW cutoff >= 1 (simulate --method ctrw)"},
        {"suite", "all | pmf | hitting | moments | conditional | ctrw | skellam"},
        {"u", "Single pgf argument (default grid 0..1)"},
        {"smax", "Right end of the s-grid (hitting)"},
        {"points", "Number of s-grid points (hitting)"}};
    std::map<std::string, CLI::Option*> opts;
    for (const auto& key : known_keys()) opts[key] = app.add_option("--" + key, flag_values[key], help.at(key));

    std::map<std::string, CLI::App*> subs;
    for (const auto& name : kCommands) subs[name] = app.add_subcommand(name)->fallthrough();
    subs["pmf"]->description("State probabilities with per-route agreement columns");
    subs["pgf"]->description("Probability generating function against the summed table");
    subs["hitting"]->description("First-passage density and survival over an s-grid");
    subs["simulate"]->description("Sample paths (JSON lines) or counts (CSV)");
    subs["validate"]->description("Run a validation suite; exit 0 iff every check passes");
    subs["moments"]->description("Means, variances and factorial moments");
    subs["conditional"]->description("Law of N(s) given N(t) = k");
    subs["jumptimes"]->description("Density of jump instants with given heights, given N(t) = k");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }
    std::string command;
    for (const auto& [name, sub] : subs)
        if (sub->parsed()) command = name;

    try {
        std::map<std::string, std::string> merged;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw UsageError("cannot read config file '" + config_path + "'");
            std::stringstream ss;
            ss << in.rdbuf();
            merged = parse_config_text(ss.str());
        }
        for (const auto& key : known_keys())
            if (const char* v = env ? env(env_name(key).c_str()) : nullptr) merged[key] = v;
        for (const auto& key : known_keys())
            if (opts[key]->count() > 0) merged[key] = flag_values[key];

        const auto c = build_config(command, merged);
        if (command == "pmf") return cmd_pmf(c, out);
        if (command == "pgf") return cmd_pgf(c, out);
        if (command == "hitting") return cmd_hitting(c, out);
        if (command == "simulate") return cmd_simulate(c, out);
        if (command == "validate") return cmd_validate(c, out);
        if (command == "moments") return cmd_moments(c, out);
        if (command == "conditional") return cmd_conditional(c, out);
        if (command == "jumptimes") return cmd_jumptimes(c, out);
        throw UsageError("unknown command");
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

} // namespace subpois::cli
