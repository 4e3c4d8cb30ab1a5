// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ebvi/bench.hpp"
#include "ebvi/cavi.hpp"
#include "ebvi/glm.hpp"
#include "ebvi/mcmc.hpp"
#include "ebvi/pilot.hpp"
#include "ebvi/posterior.hpp"
#include "ebvi/serialize.hpp"

using namespace ebvi;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bench::ExperimentSpec preset_spec(const std::string& id, std::vector<bench::Method> methods, int reps) {
    bench::ExperimentSpec spec;
    spec.scenario_id = id;
    spec.scenario = *bench::find_preset(id);
    spec.methods = std::move(methods);
    spec.replications = reps;
    spec.seed = kSeed;
    return spec;
}

const bench::Aggregate& aggregate_of(const bench::RunResult& r, bench::Method m) {
    for (const auto& a : r.aggregates)
        if (a.method == m) return a;
    throw InputError("no successful replication for " + bench::to_string(m));
}

// The data a replication sees, rebuilt from its seed the way the harness does.
Simulated replication_data(const bench::ExperimentSpec& spec, int rep) {
    SimScenario sc = spec.scenario;
    sc.seed = bench::replication_seed(spec.seed, spec.scenario_id, rep);
    Rng rng = bench::stream(sc.seed, bench::Stream::Data);
    Design design = generate_design(sc, rng);
    Vector y = sample_response(design.x, design.beta_star, rng);
    return {make_dataset(std::move(design.x), std::move(y)), design.beta_star, design.s_star};
}

Outcome recovery(const std::string& id, int reps, double tpr_min, double fdr_max) {
    const auto res = bench::run_experiment(preset_spec(id, {bench::Method::EbVi}, reps));
    const auto& a = aggregate_of(res, bench::Method::EbVi);
    return {a.rep_count == reps && a.tpr.mean >= tpr_min && a.fdr.mean <= fdr_max,
            fmt("%s reps=%d TPR=%.4f (>= %.2f) FDR=%.4f (<= %.2f)", id.c_str(), a.rep_count, a.tpr.mean,
                tpr_min, a.fdr.mean, fdr_max)};
}

Outcome criterion1() { return recovery("test1", 50, 0.85, 0.10); }
Outcome criterion2() { return recovery("test2", 50, 0.98, 0.10); }

Outcome criterion3() {
    const auto res = bench::run_experiment(preset_spec("table2_p200_s4_r0", {bench::Method::EbVi}, 100));
    const auto& a = aggregate_of(res, bench::Method::EbVi);
    return {a.rep_count == 100 && a.tnr.mean >= 0.99 && a.mcc.mean >= 0.90,
            fmt("reps=%d TNR=%.4f (>= 0.99) MCC=%.4f (>= 0.90)", a.rep_count, a.tnr.mean, a.mcc.mean)};
}

Outcome criterion4() {
    auto run = [](const std::string& id) {
        auto spec = preset_spec(id, {bench::Method::EbVi, bench::Method::EbMcmc}, 20);
        spec.chain.samples = 10000;
        const auto cmp = bench::compare_vi_mcmc(spec);
        return std::pair{cmp.d, static_cast<int>(cmp.phi_runs.rows())};
    };
    const auto [d3, n3] = run("dtable_n100_p200_s4_A3");
    const auto [d6, n6] = run("dtable_n100_p200_s4_A6");
    return {n3 == 20 && n6 == 20 && d3 <= 0.15 && d6 <= 0.10,
            fmt("A=3: D=%.4f (<= 0.15, runs=%d); A=6: D=%.4f (<= 0.10, runs=%d)", d3, n3, d6, n6)};
}

Outcome criterion5() {
    bench::ExperimentSpec spec;
    spec.scenario_id = "oracle_p10";
    spec.scenario = SimScenario{200, 10, 2, FixedSignal{3.0}, IidGaussian{1.0}, 0};
    spec.methods = {bench::Method::EbVi, bench::Method::EbMcmc};
    spec.replications = 10;
    spec.seed = kSeed;
    spec.chain.samples = 50000;
    spec.chain.smax = 5;
    double worst_mcmc = 0.0, worst_cavi = 0.0;
    bool complete = true;
    for (int r = 0; r < spec.replications; ++r) {
        const auto rec = bench::run_replication(spec, r);
        const auto sim = replication_data(spec, r);
        const auto exact = enumerate_posterior(sim.data, spec.hyper, 5);
        if (!rec.error.empty() || !rec.methods[0].error.empty() || !rec.methods[1].error.empty()) {
            complete = false;
            continue;
        }
        worst_cavi = std::max(worst_cavi, (rec.methods[0].scores - exact.inclusion).cwiseAbs().maxCoeff());
        worst_mcmc = std::max(worst_mcmc, (rec.methods[1].scores - exact.inclusion).cwiseAbs().maxCoeff());
    }
    return {complete && worst_mcmc <= 0.05 && worst_cavi <= 0.15,
            fmt("max|MCMC-exact|=%.4f (<= 0.05) max|CAVI-exact|=%.4f (<= 0.15)", worst_mcmc, worst_cavi)};
}

// Random design with logistic response, n <= 50.
Dataset random_dataset(int n, int p, Rng& rng, bool intercept = false) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) x(i, j) = g(rng);
    Vector y(n);
    std::bernoulli_distribution coin(0.5);
    for (int i = 0; i < n; ++i) y[i] = coin(rng) ? 1.0 : 0.0;
    Dataset d = make_dataset(std::move(x), std::move(y));
    d.intercept = intercept;
    return d;
}

Configuration random_subset(int p, int max_size, Rng& rng) {
    std::vector<int> all(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(std::uniform_int_distribution<int>(0, max_size)(rng)));
    return Configuration(all);
}

Outcome criterion6() {
    Rng rng(kSeed);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_violation = 0.0, worst_gap = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = std::uniform_int_distribution<int>(2, 50)(rng);
        const int p = std::uniform_int_distribution<int>(1, 12)(rng);
        const Dataset d = random_dataset(n, p, rng);
        const Configuration s = random_subset(p, p, rng);
        Vector beta = Vector::Zero(p);
        for (int j : s.indices()) beta[j] = 2.0 * g(rng);
        Vector beta_s(s.size());
        for (int k = 0; k < s.size(); ++k) beta_s[k] = beta[s.indices()[static_cast<std::size_t>(k)]];
        const double ll = glm::log_likelihood(d, s, beta_s);
        Vector eta(n);
        for (int i = 0; i < n; ++i) eta[i] = 3.0 * std::abs(g(rng));
        worst_violation = std::max(worst_violation, cavi::logistic_lower_bound(d, s, beta, eta) - ll);
        const Vector tight = glm::linear_predictor(d, s, beta_s).cwiseAbs();
        worst_gap = std::max(worst_gap, std::abs(cavi::logistic_lower_bound(d, s, beta, tight) - ll));
    }
    return {worst_violation <= 1e-9 && worst_gap <= 1e-9,
            fmt("max(bound-loglik)=%.3e (<= 1e-9) max|gap| at eta=|M|: %.3e (<= 1e-9)", worst_violation,
                worst_gap)};
}

Outcome criterion7() {
    Rng rng(kSeed + 7);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_drop = 0.0, worst_grad = 0.0;
    int interior = 0;
    for (int t = 0; t < 100; ++t) {
        const int n = std::uniform_int_distribution<int>(30, 150)(rng);
        const int p = std::uniform_int_distribution<int>(3, 40)(rng);
        const auto sim = simulate(SimScenario{n, p, std::min(3, p), FixedSignal{2.0}, IidGaussian{1.0},
                                              std::uniform_int_distribution<std::uint64_t>()(rng)});
        cavi::PlugIn plug{Vector(p), 0.0};
        for (int j = 0; j < p; ++j) plug.beta[j] = 1.5 * g(rng);
        const HyperParams h;
        const auto res = cavi::run_cavi(sim.data, plug, {}, h);
        for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
            worst_drop = std::max(worst_drop, res.objective_trace[k - 1] - res.objective_trace[k]);

        cavi::VariationalState st;
        st.phi = res.phi_hat;
        st.omega = res.omega;
        st.eta = res.eta;
        const double step = 1e-6;
        for (int j = 0; j < p; ++j) {
            const double pj = st.phi[j];
            if (pj <= 1e-3 || pj >= 1.0 - 1e-3) continue;
            ++interior;
            auto up = st, down = st;
            up.phi[j] = pj + step;
            down.phi[j] = pj - step;
            const double deriv = (cavi::surrogate_objective(up, sim.data, plug, h) -
                                  cavi::surrogate_objective(down, sim.data, plug, h)) /
                                 (2 * step);
            worst_grad = std::max(worst_grad, std::abs(deriv));
        }
    }
    return {worst_drop <= 1e-8 && worst_grad < 1e-3,
            fmt("max trace drop=%.3e (<= 1e-8) max|dK/dphi_j| over %d interior coords=%.3e (< 1e-3)",
                worst_drop, interior, worst_grad)};
}

Outcome criterion8() {
    Rng rng(kSeed + 8);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_score = 0.0, worst_fisher = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int p = std::uniform_int_distribution<int>(1, 8)(rng);
        const Dataset d = random_dataset(std::uniform_int_distribution<int>(20, 50)(rng), p, rng, t % 2 == 1);
        Configuration s = random_subset(p, std::min(p, 5), rng);
        if (s.size() == 0 && !d.intercept) s = Configuration({0});
        const int k = glm::parameter_count(d, s);
        Vector beta(k);
        for (int c = 0; c < k; ++c) beta[c] = 0.7 * g(rng);

        const Vector score = glm::score(d, s, beta);
        const Matrix fisher = glm::fisher_information(d, s, beta);
        Vector fd_score(k);
        Matrix fd_fisher(k, k);
        const double h1 = 1e-5, h2 = 1e-5;
        for (int c = 0; c < k; ++c) {
            Vector up = beta, down = beta;
            up[c] += h1;
            down[c] -= h1;
            fd_score[c] = (glm::log_likelihood(d, s, up) - glm::log_likelihood(d, s, down)) / (2 * h1);
            up = beta;
            down = beta;
            up[c] += h2;
            down[c] -= h2;
            // Fisher information is minus the Hessian of the log-likelihood.
            fd_fisher.col(c) = -(glm::score(d, s, up) - glm::score(d, s, down)) / (2 * h2);
        }
        worst_score = std::max(worst_score, (score - fd_score).norm() / score.norm());
        worst_fisher = std::max(worst_fisher, (fisher - fd_fisher).norm() / fisher.norm());
    }
    return {worst_score <= 1e-5 && worst_fisher <= 1e-4,
            fmt("max relative error: score=%.3e (<= 1e-5) Fisher=%.3e (<= 1e-4)", worst_score, worst_fisher)};
}

Outcome criterion9() {
    std::vector<double> means;
    std::string detail;
    bool complete = true;
    for (int n : {100, 200, 400, 800}) {
        bench::ExperimentSpec spec;
        spec.scenario_id = "consistency_n" + std::to_string(n);
        spec.scenario = SimScenario{n, 100, 3, FixedSignal{3.0}, IidGaussian{1.0}, 0};
        spec.replications = 20;
        spec.seed = kSeed;
        const auto res = bench::run_experiment(spec);
        double sum = 0.0;
        int count = 0;
        for (std::size_t r = 0; r < res.reps.size(); ++r) {
            const auto& rec = res.reps[r].methods.at(0);
            if (!rec.error.empty()) {
                complete = false;
                continue;
            }
            const auto sim = replication_data(spec, static_cast<int>(r));
            sum += std::exp(cavi::log_q(rec.scores, sim.s_star));
            ++count;
        }
        means.push_back(count ? sum / count : 0.0);
        detail += fmt("n=%d: %.4f  ", n, means.back());
    }
    const bool monotone = std::is_sorted(means.begin(), means.end());
    return {complete && monotone && means.back() > 0.9,
            detail + fmt("(nondecreasing=%s, > 0.9 at n=800)", monotone ? "yes" : "no")};
}

Outcome criterion10() {
    std::vector<std::string> broken;
    auto check = [&](const std::string& what, const std::function<std::string()>& f) {
        if (f() != f()) broken.push_back(what);
    };
    const bench::EmitOptions no_time{false};
    const auto small = [] {
        auto spec = preset_spec("table2_p200_s4_r0.2",
                                {bench::Method::EbVi, bench::Method::EbMcmc, bench::Method::Pilot}, 4);
        spec.chain.samples = 3000;
        return spec;
    };
    check("simulate", [] {
        const auto sim = simulate(SimScenario{60, 30, 3, UniformSignal{-2, 2}, Ar1Gaussian{0.3}, kSeed});
        return vector_to_json(sim.data.y).dump() + vector_to_json(sim.beta_star).dump() +
               vector_to_json(Eigen::Map<const Vector>(sim.data.x.data(), sim.data.x.size())).dump();
    });
    check("pilot", [] {
        const auto sim = simulate(SimScenario{100, 50, 3, FixedSignal{2}, IidGaussian{1}, kSeed});
        Rng folds(kSeed);
        const auto est = bench::fit_pilot(sim.data, {}, folds);
        return vector_to_json(est.beta_tilde).dump() + format_number(est.lambda_used);
    });
    check("cavi", [] {
        const auto sim = simulate(SimScenario{100, 50, 3, FixedSignal{2}, IidGaussian{1}, kSeed});
        Rng rng(kSeed);
        Vector b = Vector::Constant(50, 0.005);
        b.head(3).setConstant(2.0);
        const auto res = cavi::run_cavi(sim.data, {b, 0.0}, {}, {});
        return to_json(res, cavi::select_and_refit(res.phi_hat, sim.data, 0.5)).dump();
    });
    check("mcmc", [] {
        const auto sim = simulate(SimScenario{100, 30, 3, FixedSignal{2}, IidGaussian{1}, kSeed});
        Rng rng(kSeed);
        return to_json(mcmc::mh_run(sim.data, {}, {3000, -1, -1, 0}, rng)).dump();
    });
    check("enumerate", [] {
        const auto sim = simulate(SimScenario{80, 8, 2, FixedSignal{2}, IidGaussian{1}, kSeed});
        return to_json(enumerate_posterior(sim.data, {}, 4)).dump();
    });
    check("run_experiment", [&] { return to_json(bench::run_experiment(small()), no_time).dump(); });
    check("compare_vi_mcmc", [&] {
        const auto cmp = bench::compare_vi_mcmc(small());
        return format_number(cmp.d) + to_json(cmp.run, no_time).dump();
    });

    std::string by_workers[3];
    for (int w : {1, 2, 4}) {
        auto spec = small();
        spec.workers = w;
        const auto res = bench::run_experiment(spec);
        by_workers[w == 1 ? 0 : w == 2 ? 1 : 2] =
            to_json(res, no_time).dump() + bench::aggregate_csv({res}, no_time);
    }
    if (by_workers[0] != by_workers[1] || by_workers[0] != by_workers[2]) broken.push_back("workers");

    std::string detail = "simulate, pilot, cavi, mcmc, enumerate, run_experiment, compare_vi_mcmc; workers 1/2/4";
    if (!broken.empty()) {
        detail += "; differing:";
        for (const auto& b : broken) detail += " " + b;
    }
    return {broken.empty(), detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
        {"test1 recovery", criterion1},
        {"test2 recovery", criterion2},
        {"table2 p=200 s=4 r=0", criterion3},
        {"VI vs MCMC D distance", criterion4},
        {"oracle equivalence p=10", criterion5},
        {"bound validity", criterion6},
        {"monotone surrogate and stationarity", criterion7},
        {"score and Fisher finite differences", criterion8},
        {"consistency trend in n", criterion9},
        {"determinism", criterion10},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
