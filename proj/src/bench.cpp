#include "ebvi/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>
#include <thread>

#include "ebvi/pilot.hpp"
#include "ebvi/serialize.hpp"

namespace ebvi::bench {

std::string to_string(Method m) {
    switch (m) {
        case Method::EbVi: return "ebvi";
        case Method::EbMcmc: return "ebmcmc";
        case Method::Pilot: return "pilot";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    if (name == "ebvi") return Method::EbVi;
    if (name == "ebmcmc") return Method::EbMcmc;
    if (name == "pilot") return Method::Pilot;
    throw InputError("unknown method '" + name + "' (expected ebvi, ebmcmc or pilot)");
}

namespace {

SimScenario iid(int n, int p, double sigma, int s, double amplitude) {
    SimScenario sc;
    sc.n = n;
    sc.p = p;
    sc.s = s;
    sc.signal = FixedSignal{amplitude};
    sc.design = IidGaussian{sigma};
    return sc;
}

SimScenario iid_uniform(int n, int p, double sigma, int s, double lo, double hi) {
    SimScenario sc = iid(n, p, sigma, s, 0.0);
    sc.signal = UniformSignal{lo, hi};
    return sc;
}

SimScenario ar1(int n, int p, double r, int s, double amplitude) {
    SimScenario sc = iid(n, p, 1.0, s, amplitude);
    sc.design = Ar1Gaussian{r};
    return sc;
}

std::vector<Preset> build_presets() {
    std::vector<Preset> out{
        {"test1", iid(250, 500, 0.25, 5, 4.0)},
        {"test2", iid(250, 500, 2.0, 10, 6.0)},
        {"test3", iid_uniform(250, 500, 0.5, 15, -2.0, 2.0)},
        {"test4", iid(2500, 5000, 0.5, 25, 2.0)},
        {"test5", iid_uniform(2500, 5000, 1.0, 10, -1.0, 1.0)},
    };
    for (int p : {200, 400})
        for (int s : {4, 8})
            for (const char* r : {"0", "0.2"})
                out.push_back({"table2_p" + std::to_string(p) + "_s" + std::to_string(s) + "_r" + r,
                               ar1(100, p, std::stod(r), s, 3.0)});
    struct Cell {
        int n, p, s, a;
    };
    for (Cell c : {Cell{100, 200, 4, 3}, Cell{100, 200, 6, 3}, Cell{100, 200, 4, 6},
                   Cell{200, 400, 4, 3}})
        out.push_back({"dtable_n" + std::to_string(c.n) + "_p" + std::to_string(c.p) + "_s" +
                           std::to_string(c.s) + "_A" + std::to_string(c.a),
                       iid(c.n, c.p, 1.0, c.s, c.a)});
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void score(MethodRecord& rec, const Configuration& s_star, int p) {
    rec.confusion = metrics::confusion(rec.s_hat, s_star, p);
    rec.tpr = metrics::tpr(rec.confusion);
    rec.fdr = metrics::fdr(rec.confusion);
    rec.tnr = metrics::tnr(rec.confusion);
    rec.mcc = metrics::mcc(rec.confusion);
}

Summary summarize(const std::vector<double>& v) {
    Summary s;
    if (v.empty()) {
        s.mean = std::numeric_limits<double>::quiet_NaN();
        s.sd = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double acc = 0.0;
    for (double x : v) acc += x;
    s.mean = acc / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return s;
}

}  // namespace

const std::vector<Preset>& presets() {
    static const std::vector<Preset> registry = build_presets();
    return registry;
}

std::optional<SimScenario> find_preset(const std::string& id) {
    for (const auto& p : presets())
        if (p.id == id) return p.scenario;
    return std::nullopt;
}

void ExperimentSpec::validate() const {
    if (replications < 1) throw InputError("replications must be at least 1");
    if (methods.empty()) throw InputError("at least one method is required");
    if (workers < 0) throw InputError("workers must be nonnegative");
    scenario.validate();
    hyper.validate();
    cavi.validate(scenario.p);
    if (pilot.folds < 2) throw InputError("pilot needs at least 2 folds");
}

Rng stream(std::uint64_t rep_seed, Stream s) {
    return Rng(splitmix64(rep_seed ^ splitmix64(static_cast<std::uint64_t>(s))));
}

std::uint64_t replication_seed(std::uint64_t master, const std::string& scenario_id, int rep) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ fnv1a(scenario_id));
    return splitmix64(h ^ static_cast<std::uint64_t>(rep));
}

pilot::PilotEstimate fit_pilot(const Dataset& d, const PilotSettings& ps, Rng& fold_rng) {
    const auto grid = pilot::default_lambda_grid(d, ps.grid_size, ps.grid_ratio);
    if (ps.relaxed)
        return pilot::fit_relaxed_l1_logistic(d, grid, ps.folds, fold_rng, {ps.max_support_fraction});
    return pilot::fit_l1_logistic(d, grid, ps.folds, fold_rng);
}

ReplicationRecord run_replication(const ExperimentSpec& spec, int rep) {
    ReplicationRecord out;
    out.rep = rep;
    out.seed = replication_seed(spec.seed, spec.scenario_id, rep);
    try {
        SimScenario sc = spec.scenario;
        sc.seed = out.seed;
        Rng data_rng = stream(out.seed, Stream::Data);
        Design design = generate_design(sc, data_rng);
        Vector y = sample_response(design.x, design.beta_star, data_rng);
        const Dataset d = make_dataset(std::move(design.x), std::move(y));
        const Configuration& s_star = design.s_star;

        bool need_pilot = false;
        for (Method m : spec.methods) need_pilot |= (m == Method::EbVi || m == Method::Pilot);
        pilot::PilotEstimate est;
        double pilot_time = 0.0;
        if (need_pilot) {
            const auto start = std::chrono::steady_clock::now();
            Rng fold_rng = stream(out.seed, Stream::Folds);
            est = fit_pilot(d, spec.pilot, fold_rng);
            pilot_time = seconds_since(start);
        }

        for (Method m : spec.methods) {
            MethodRecord rec;
            rec.method = m;
            try {
                const auto start = std::chrono::steady_clock::now();
                if (m == Method::Pilot) {
                    rec.scores = est.beta_tilde;
                    std::vector<int> nz;
                    for (int j = 0; j < d.p(); ++j)
                        if (est.beta_tilde[j] != 0.0) nz.push_back(j);
                    rec.s_hat = Configuration(std::move(nz));
                    rec.lambda_used = est.lambda_used;
                    rec.wall_time_s = pilot_time;
                } else if (m == Method::EbVi) {
                    Rng jitter_rng = stream(out.seed, Stream::Jitter);
                    const auto jittered = pilot::jitter_zeros(est, spec.pilot.jitter_scale, jitter_rng);
                    const cavi::PlugIn plug{jittered.beta_tilde, jittered.intercept};
                    const auto res = cavi::run_cavi(d, plug, spec.cavi, spec.hyper);
                    rec.scores = res.phi_hat;
                    rec.sweeps = res.sweeps;
                    rec.lambda_used = est.lambda_used;
                    std::vector<int> chosen;
                    for (int j = 0; j < d.p(); ++j)
                        if (res.phi_hat[j] >= spec.cavi.threshold) chosen.push_back(j);
                    rec.s_hat = Configuration(std::move(chosen));
                    rec.wall_time_s = pilot_time + seconds_since(start);
                } else {
                    Rng chain_rng = stream(out.seed, Stream::Chain);
                    FitCache cache;
                    const auto res = mcmc::mh_run(d, spec.hyper, spec.chain, chain_rng, &cache);
                    rec.scores = res.inclusion;
                    rec.accept_rate = res.accept_rate;
                    std::vector<int> chosen;
                    for (int j = 0; j < d.p(); ++j)
                        if (res.inclusion[j] >= spec.cavi.threshold) chosen.push_back(j);
                    rec.s_hat = Configuration(std::move(chosen));
                    rec.wall_time_s = seconds_since(start);
                }
                score(rec, s_star, d.p());
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
            out.methods.push_back(std::move(rec));
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<Aggregate> aggregate(const std::vector<ReplicationRecord>& reps,
                                 const std::vector<Method>& methods) {
    std::vector<Aggregate> out;
    for (Method m : methods) {
        Aggregate agg;
        agg.method = m;
        std::vector<double> tprs, fdrs, tnrs, mccs, times;
        for (const auto& rep : reps) {
            if (!rep.error.empty()) continue;
            for (const auto& rec : rep.methods) {
                if (rec.method != m || !rec.error.empty()) continue;
                ++agg.rep_count;
                if (rec.tpr) tprs.push_back(*rec.tpr);
                if (rec.tnr) tnrs.push_back(*rec.tnr);
                fdrs.push_back(rec.fdr);
                mccs.push_back(rec.mcc);
                times.push_back(rec.wall_time_s);
            }
        }
        if (agg.rep_count == 0) continue;
        agg.tpr = summarize(tprs);
        agg.fdr = summarize(fdrs);
        agg.tnr = summarize(tnrs);
        agg.mcc = summarize(mccs);
        agg.time_mean_s = summarize(times).mean;
        out.push_back(agg);
    }
    return out;
}

RunResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    RunResult result;
    result.scenario_id = spec.scenario_id;
    result.methods = spec.methods;
    result.reps.resize(static_cast<std::size_t>(spec.replications));

    int workers = spec.workers > 0 ? spec.workers
                                   : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, spec.replications);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int rep = next++; rep < spec.replications; rep = next++)
            result.reps[static_cast<std::size_t>(rep)] = run_replication(spec, rep);
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    result.aggregates = aggregate(result.reps, result.methods);
    return result;
}

Comparison compare_vi_mcmc(ExperimentSpec spec) {
    spec.methods = {Method::EbVi, Method::EbMcmc};
    Comparison out;
    out.run = run_experiment(spec);
    std::vector<const Vector*> phis, pis;
    for (const auto& rep : out.run.reps) {
        if (!rep.error.empty() || rep.methods.size() != 2) continue;
        if (!rep.methods[0].error.empty() || !rep.methods[1].error.empty()) continue;
        phis.push_back(&rep.methods[0].scores);
        pis.push_back(&rep.methods[1].scores);
    }
    if (phis.empty()) throw NumericalFailure("no replication produced both EB-VI and EB-MCMC output");
    const auto runs = static_cast<Eigen::Index>(phis.size());
    out.phi_runs.resize(runs, spec.scenario.p);
    out.pi_runs.resize(runs, spec.scenario.p);
    for (Eigen::Index r = 0; r < runs; ++r) {
        out.phi_runs.row(r) = phis[static_cast<std::size_t>(r)]->transpose();
        out.pi_runs.row(r) = pis[static_cast<std::size_t>(r)]->transpose();
    }
    out.d = metrics::d_distance(out.phi_runs, out.pi_runs);
    return out;
}

std::string aggregate_csv(const std::vector<RunResult>& results, const EmitOptions& opts) {
    std::ostringstream csv;
    csv << "scenario,method,rep_count,tpr_mean,tpr_sd,fdr_mean,fdr_sd,tnr_mean,tnr_sd,mcc_mean,"
           "mcc_sd,time_mean_s\n";
    for (const auto& res : results) {
        for (const auto& a : res.aggregates) {
            csv << res.scenario_id << ',' << to_string(a.method) << ',' << a.rep_count;
            for (const Summary* s : {&a.tpr, &a.fdr, &a.tnr, &a.mcc})
                csv << ',' << format_number(s->mean) << ',' << format_number(s->sd);
            csv << ',' << format_number(opts.include_timing ? a.time_mean_s : 0.0) << '\n';
        }
    }
    return csv.str();
}

std::vector<std::filesystem::path> emit(const std::vector<RunResult>& results,
                                        const std::string& format,
                                        const std::filesystem::path& path,
                                        const EmitOptions& opts) {
    if (format != "csv" && format != "json" && format != "both")
        throw InputError("format must be csv, json or both");
    std::vector<std::filesystem::path> written;
    auto open = [](const std::filesystem::path& target) {
        std::error_code ec;
        if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path(), ec);
        std::ofstream out(target, std::ios::binary);
        if (!out) throw InputError("cannot write " + target.string());
        return out;
    };
    std::filesystem::path stem = path;
    if (stem.extension() == ".csv" || stem.extension() == ".json") stem.replace_extension();
    if (format == "csv" || format == "both") {
        auto target = std::filesystem::path(stem).concat(".csv");
        open(target) << aggregate_csv(results, opts);
        written.push_back(target);
    }
    if (format == "json" || format == "both") {
        auto target = std::filesystem::path(stem).concat(".json");
        Json doc = Json::array();
        for (const auto& r : results) doc.push_back(to_json(r, opts));
        open(target) << doc.dump(2) << '\n';
        written.push_back(target);
    }
    return written;
}

}  // namespace ebvi::bench
