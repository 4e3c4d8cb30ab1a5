#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ebvi/bench.hpp"
#include "ebvi/cavi.hpp"
#include "ebvi/dataset.hpp"
#include "ebvi/mcmc.hpp"
#include "ebvi/pilot.hpp"
#include "ebvi/posterior.hpp"
#include "ebvi/serialize.hpp"

namespace {

using namespace ebvi;

// Every flag lives here so a JSON config can seed it before parsing.
struct Options {
    std::vector<std::string> scenarios;
    int reps = 1;
    std::uint64_t seed = 0;
    double a = 0.01, gamma = 0.1, alpha = 0.99;
    double epsilon = 1e-5;
    int max_iter = 100;
    double threshold = 0.5;
    int samples = 10000;
    int burn_in = -1;
    int smax = -1;
    int workers = 0;
    std::string out;
    std::string format = "both";
    std::string beta_tilde;
    std::vector<std::string> methods{"ebvi"};

    std::string data;
    std::string response = "y";
    bool standardize = false;
    bool intercept = false;

    int n = 0, p = 0, s = 0;
    std::string signal = "fixed:1";
    std::string design = "iid:1";

    int folds = 5;
    bool plain_lasso = false;
    int top = 20;
    bool no_timing = false;
};

template <class T>
void take(const Json& j, const char* key, T& dst) {
    if (j.contains(key)) dst = j.at(key).get<T>();
}

void load_config(const std::string& path, Options& o) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path);
    const Json j = Json::parse(in);
    if (j.contains("scenario")) {
        const auto& v = j.at("scenario");
        o.scenarios = v.is_array() ? v.get<std::vector<std::string>>()
                                   : std::vector<std::string>{v.get<std::string>()};
    }
    take(j, "reps", o.reps);
    take(j, "seed", o.seed);
    take(j, "a", o.a);
    take(j, "gamma", o.gamma);
    take(j, "alpha", o.alpha);
    take(j, "epsilon", o.epsilon);
    take(j, "max-iter", o.max_iter);
    take(j, "threshold", o.threshold);
    take(j, "samples", o.samples);
    take(j, "burn-in", o.burn_in);
    take(j, "smax", o.smax);
    take(j, "workers", o.workers);
    take(j, "out", o.out);
    take(j, "format", o.format);
    take(j, "beta-tilde", o.beta_tilde);
    take(j, "methods", o.methods);
    take(j, "data", o.data);
    take(j, "response", o.response);
    take(j, "standardize", o.standardize);
    take(j, "intercept", o.intercept);
    take(j, "n", o.n);
    take(j, "p", o.p);
    take(j, "s", o.s);
    take(j, "signal", o.signal);
    take(j, "design", o.design);
    take(j, "folds", o.folds);
    take(j, "plain-lasso", o.plain_lasso);
    take(j, "top", o.top);
    take(j, "no-timing", o.no_timing);
}

std::vector<double> split_numbers(const std::string& text, char sep) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, sep)) out.push_back(std::stod(tok));
    return out;
}

// "fixed:A" or "uniform:lo:hi"; "iid:sigma" or "ar1:r".
SimScenario inline_scenario(const Options& o) {
    SimScenario sc;
    sc.n = o.n;
    sc.p = o.p;
    sc.s = o.s;
    const auto colon = [](const std::string& t) {
        const auto k = t.find(':');
        return k == std::string::npos ? std::pair{t, std::string{}} : std::pair{t.substr(0, k), t.substr(k + 1)};
    };
    auto [skind, sargs] = colon(o.signal);
    const auto sv = split_numbers(sargs, ':');
    if (skind == "fixed" && sv.size() == 1) sc.signal = FixedSignal{sv[0]};
    else if (skind == "uniform" && sv.size() == 2) sc.signal = UniformSignal{sv[0], sv[1]};
    else throw InputError("bad --signal '" + o.signal + "'");
    auto [dkind, dargs] = colon(o.design);
    const auto dv = split_numbers(dargs, ':');
    if (dkind == "iid" && dv.size() == 1) sc.design = IidGaussian{dv[0]};
    else if (dkind == "ar1" && dv.size() == 1) sc.design = Ar1Gaussian{dv[0]};
    else throw InputError("bad --design '" + o.design + "'");
    sc.validate();
    return sc;
}

std::pair<std::string, SimScenario> scenario_of(const Options& o, std::size_t k) {
    if (k < o.scenarios.size()) {
        const auto& id = o.scenarios[k];
        auto sc = bench::find_preset(id);
        if (!sc) throw InputError("unknown scenario '" + id + "'");
        return {id, *sc};
    }
    return {"custom", inline_scenario(o)};
}

HyperParams hyper_of(const Options& o) {
    HyperParams h{o.a, o.gamma, o.alpha};
    h.validate();
    return h;
}

struct Input {
    Dataset data;
    Configuration s_star;
    bool simulated = false;
};

Input input_of(const Options& o) {
    if (!o.data.empty()) return {load_csv(o.data, o.response, {o.standardize, o.intercept}), {}, false};
    auto [id, sc] = scenario_of(o, 0);
    sc.seed = o.seed;
    auto sim = simulate(sc);
    return {std::move(sim.data), sim.s_star, true};
}

Vector read_beta_tilde(const std::string& path, int p) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<double> vals;
    std::string tok;
    while (in >> tok) {
        for (auto& c : tok)
            if (c == ',') c = ' ';
        std::stringstream ss(tok);
        double v;
        while (ss >> v) vals.push_back(v);
    }
    if (static_cast<int>(vals.size()) != p)
        throw InputError("beta-tilde file has " + std::to_string(vals.size()) + " values, expected " +
                         std::to_string(p));
    return Eigen::Map<Vector>(vals.data(), p);
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

int cmd_fit(const Options& o) {
    const Input in = input_of(o);
    const Dataset& d = in.data;
    pilot::PilotEstimate est;
    if (!o.beta_tilde.empty()) {
        est.beta_tilde = read_beta_tilde(o.beta_tilde, d.p());
    } else {
        bench::PilotSettings ps;
        ps.folds = o.folds;
        ps.relaxed = !o.plain_lasso;
        Rng fold_rng = bench::stream(o.seed, bench::Stream::Folds);
        est = bench::fit_pilot(d, ps, fold_rng);
    }
    Rng jitter_rng = bench::stream(o.seed, bench::Stream::Jitter);
    const auto jittered = pilot::jitter_zeros(est, 0.01, jitter_rng);
    cavi::CaviConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.max_iter = o.max_iter;
    cfg.threshold = o.threshold;
    const auto res = cavi::run_cavi(d, {jittered.beta_tilde, jittered.intercept}, cfg, hyper_of(o));
    const auto sel = cavi::select_and_refit(res.phi_hat, d, o.threshold);
    Json j = to_json(res, sel);
    j["names"] = d.names;
    j["lambda_used"] = est.lambda_used;
    if (in.simulated) j["true_support"] = config_to_json(in.s_star);
    write_text(o.out, j.dump(2) + "\n");
    return 0;
}

int cmd_mcmc(const Options& o) {
    const Input in = input_of(o);
    mcmc::ChainConfig cfg;
    cfg.samples = o.samples;
    cfg.burn_in = o.burn_in;
    cfg.smax = o.smax;
    cfg.seed = o.seed;
    Rng rng = bench::stream(o.seed, bench::Stream::Chain);
    FitCache cache;
    const auto res = mcmc::mh_run(in.data, hyper_of(o), cfg, rng, &cache);
    Json j = to_json(res);
    j["names"] = in.data.names;
    if (in.simulated) j["true_support"] = config_to_json(in.s_star);
    write_text(o.out, j.dump(2) + "\n");
    return 0;
}

int cmd_enumerate(const Options& o) {
    const Input in = input_of(o);
    const int smax = o.smax < 0 ? std::min(in.data.p(), in.data.n() - 1) : o.smax;
    auto table = enumerate_posterior(in.data, hyper_of(o), smax);
    Json j = to_json(table);
    // Keep the most probable configurations only.
    auto entries = table.entries;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& l, const auto& r) { return l.prob > r.prob; });
    if (o.top >= 0 && static_cast<int>(entries.size()) > o.top) entries.resize(static_cast<std::size_t>(o.top));
    Json top = Json::array();
    for (const auto& e : entries) top.push_back({{"indices", config_to_json(e.config)}, {"prob", e.prob}});
    j["entries"] = top;
    j["configurations"] = table.entries.size();
    j["names"] = in.data.names;
    write_text(o.out, j.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const Options& o) {
    auto [id, sc] = scenario_of(o, 0);
    sc.seed = o.seed;
    const auto sim = simulate(sc);
    if (o.out.empty()) throw InputError("simulate needs --out");
    write_csv(sim.data, o.out, o.response);
    std::cout << Json({{"scenario", id},
                       {"csv", o.out},
                       {"true_support", config_to_json(sim.s_star)},
                       {"beta_star", vector_to_json(sim.beta_star)}})
                     .dump()
              << "\n";
    return 0;
}

int cmd_compare(const Options& o) {
    std::vector<bench::RunResult> results;
    const std::size_t count = std::max<std::size_t>(o.scenarios.size(), 1);
    for (std::size_t k = 0; k < count; ++k) {
        auto [id, sc] = scenario_of(o, k);
        bench::ExperimentSpec spec;
        spec.scenario_id = id;
        spec.scenario = sc;
        spec.methods.clear();
        for (const auto& m : o.methods) spec.methods.push_back(bench::method_from_string(m));
        spec.replications = o.reps;
        spec.seed = o.seed;
        spec.hyper = hyper_of(o);
        spec.cavi.epsilon = o.epsilon;
        spec.cavi.max_iter = o.max_iter;
        spec.cavi.threshold = o.threshold;
        spec.chain.samples = o.samples;
        spec.chain.burn_in = o.burn_in;
        spec.chain.smax = o.smax;
        spec.pilot.folds = o.folds;
        spec.pilot.relaxed = !o.plain_lasso;
        spec.workers = o.workers;
        spec.validate();

        const bool both = std::count(spec.methods.begin(), spec.methods.end(), bench::Method::EbVi) &&
                          std::count(spec.methods.begin(), spec.methods.end(), bench::Method::EbMcmc);
        if (both) {
            auto cmp = bench::compare_vi_mcmc(spec);
            std::cerr << id << " D = " << format_number(cmp.d) << "\n";
            results.push_back(std::move(cmp.run));
        } else {
            results.push_back(bench::run_experiment(spec));
        }
    }
    const bench::EmitOptions eo{!o.no_timing};
    if (o.out.empty()) {
        std::cout << bench::aggregate_csv(results, eo);
        return 0;
    }
    for (const auto& path : bench::emit(results, o.format, o.out, eo)) std::cerr << "wrote " << path.string() << "\n";
    return 0;
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--a", o.a, "complexity prior exponent");
    sub->add_option("--gamma", o.gamma, "prior spread");
    sub->add_option("--alpha", o.alpha, "likelihood power in (0,1)");
    sub->add_option("--out", o.out, "output file (stem for compare)");
}

void add_source(CLI::App* sub, Options& o) {
    sub->add_option("--scenario", o.scenarios, "named preset");
    sub->add_option("--n", o.n, "inline scenario rows");
    sub->add_option("--p", o.p, "inline scenario columns");
    sub->add_option("--s", o.s, "inline scenario signal count");
    sub->add_option("--signal", o.signal, "fixed:A or uniform:lo:hi");
    sub->add_option("--design", o.design, "iid:sigma or ar1:r");
}

void add_data(CLI::App* sub, Options& o) {
    sub->add_option("--data", o.data, "CSV input with a header row");
    sub->add_option("--response", o.response, "response column name");
    sub->add_flag("--standardize", o.standardize, "scale columns to unit variance");
    sub->add_flag("--intercept", o.intercept, "fit an unpenalized intercept");
}

void add_cavi(CLI::App* sub, Options& o) {
    sub->add_option("--epsilon", o.epsilon, "entropy stopping threshold");
    sub->add_option("--max-iter", o.max_iter, "maximum CAVI sweeps");
    sub->add_option("--threshold", o.threshold, "selection threshold on phi");
    sub->add_option("--folds", o.folds, "pilot cross-validation folds");
    sub->add_flag("--plain-lasso", o.plain_lasso, "pilot without the relaxed refit");
}

void add_chain(CLI::App* sub, Options& o) {
    sub->add_option("--samples", o.samples, "chain length including burn-in");
    sub->add_option("--burn-in", o.burn_in, "discarded leading states");
    sub->add_option("--smax", o.smax, "model size cap");
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    // A config file seeds the defaults; explicit flags then override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                load_config(argv[i + 1], o);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }

    CLI::App app{"Empirical-Bayes variable selection for logistic regression"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with flag values")->configurable(false);

    auto* fit = app.add_subcommand("fit", "EB-VI on a CSV file or a simulated scenario");
    add_common(fit, o);
    add_source(fit, o);
    add_data(fit, o);
    add_cavi(fit, o);
    fit->add_option("--beta-tilde", o.beta_tilde, "file of p plug-in coefficients");

    auto* mc = app.add_subcommand("mcmc", "Metropolis-Hastings over configurations");
    add_common(mc, o);
    add_source(mc, o);
    add_data(mc, o);
    add_chain(mc, o);

    auto* sim = app.add_subcommand("simulate", "write a simulated data set as CSV");
    add_common(sim, o);
    add_source(sim, o);
    sim->add_option("--response", o.response, "response column name");

    auto* cmp = app.add_subcommand("compare", "replicated benchmark over scenarios and methods");
    add_common(cmp, o);
    add_source(cmp, o);
    add_cavi(cmp, o);
    add_chain(cmp, o);
    cmp->add_option("--reps", o.reps, "replications per scenario");
    cmp->add_option("--workers", o.workers, "worker threads, 0 for all cores");
    cmp->add_option("--methods", o.methods, "ebvi, ebmcmc, pilot")->delimiter(',');
    cmp->add_option("--format", o.format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
    cmp->add_flag("--no-timing", o.no_timing, "zero wall times for byte-stable output");

    auto* en = app.add_subcommand("enumerate", "exact posterior by enumeration (small p)");
    add_common(en, o);
    add_source(en, o);
    add_data(en, o);
    en->add_option("--smax", o.smax, "model size cap");
    en->add_option("--top", o.top, "configurations listed, -1 for all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*fit) return cmd_fit(o);
        if (*mc) return cmd_mcmc(o);
        if (*sim) return cmd_simulate(o);
        if (*cmp) return cmd_compare(o);
        if (*en) return cmd_enumerate(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
