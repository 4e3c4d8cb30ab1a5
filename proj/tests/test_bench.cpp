#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ebvi/bench.hpp"
#include "ebvi/serialize.hpp"

namespace fs = std::filesystem;
using namespace ebvi;
using namespace ebvi::bench;

namespace {

ExperimentSpec small_spec(std::vector<Method> methods, int reps = 3) {
    ExperimentSpec spec;
    spec.scenario_id = "small";
    spec.scenario = SimScenario{60, 20, 2, FixedSignal{2.0}, IidGaussian{1.0}, 0};
    spec.methods = std::move(methods);
    spec.replications = reps;
    spec.seed = 42;
    spec.chain.samples = 1500;
    spec.workers = 1;
    return spec;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Presets, MatchExpectedSettings) {
    struct Row {
        const char* id;
        int n, p, s;
        double amp_or_lo, hi;  // hi < amp_or_lo means a fixed amplitude
        bool ar1;
        double sigma_or_r;
    };
    const std::vector<Row> rows{
        {"test1", 250, 500, 5, 4, 0, false, 0.25},  {"test2", 250, 500, 10, 6, 0, false, 2},
        {"test3", 250, 500, 15, -2, 2, false, 0.5}, {"test4", 2500, 5000, 25, 2, 0, false, 0.5},
        {"test5", 2500, 5000, 10, -1, 1, false, 1}, {"table2_p200_s4_r0", 100, 200, 4, 3, 0, true, 0},
        {"table2_p200_s4_r0.2", 100, 200, 4, 3, 0, true, 0.2},
        {"table2_p200_s8_r0", 100, 200, 8, 3, 0, true, 0},
        {"table2_p200_s8_r0.2", 100, 200, 8, 3, 0, true, 0.2},
        {"table2_p400_s4_r0", 100, 400, 4, 3, 0, true, 0},
        {"table2_p400_s4_r0.2", 100, 400, 4, 3, 0, true, 0.2},
        {"table2_p400_s8_r0", 100, 400, 8, 3, 0, true, 0},
        {"table2_p400_s8_r0.2", 100, 400, 8, 3, 0, true, 0.2},
    };
    for (const auto& r : rows) {
        const auto sc = find_preset(r.id);
        ASSERT_TRUE(sc.has_value()) << r.id;
        EXPECT_EQ(sc->n, r.n) << r.id;
        EXPECT_EQ(sc->p, r.p) << r.id;
        EXPECT_EQ(sc->s, r.s) << r.id;
        if (r.hi > r.amp_or_lo) {
            const auto& u = std::get<UniformSignal>(sc->signal);
            EXPECT_EQ(u.lo, r.amp_or_lo);
            EXPECT_EQ(u.hi, r.hi);
        } else {
            EXPECT_EQ(std::get<FixedSignal>(sc->signal).amplitude, r.amp_or_lo) << r.id;
        }
        if (r.ar1) EXPECT_EQ(std::get<Ar1Gaussian>(sc->design).r, r.sigma_or_r) << r.id;
        else EXPECT_EQ(std::get<IidGaussian>(sc->design).sigma, r.sigma_or_r) << r.id;
    }
    EXPECT_FALSE(find_preset("nope").has_value());
}

TEST(Presets, DistanceCells) {
    for (const auto& [id, n, p, s, amp] :
         std::vector<std::tuple<std::string, int, int, int, double>>{{"dtable_n100_p200_s4_A3", 100, 200, 4, 3},
                                                                     {"dtable_n100_p200_s6_A3", 100, 200, 6, 3},
                                                                     {"dtable_n100_p200_s4_A6", 100, 200, 4, 6},
                                                                     {"dtable_n200_p400_s4_A3", 200, 400, 4, 3}}) {
        const auto sc = find_preset(id);
        ASSERT_TRUE(sc) << id;
        EXPECT_EQ(sc->n, n);
        EXPECT_EQ(sc->p, p);
        EXPECT_EQ(sc->s, s);
        EXPECT_EQ(std::get<FixedSignal>(sc->signal).amplitude, amp);
    }
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::EbVi, Method::EbMcmc, Method::Pilot}) EXPECT_EQ(method_from_string(to_string(m)), m);
    EXPECT_THROW(method_from_string("scad"), InputError);
}

TEST(ReplicationSeed, DeterministicAndDistinct) {
    std::set<std::uint64_t> seen;
    for (int r = 0; r < 100; ++r) seen.insert(replication_seed(7, "test1", r));
    EXPECT_EQ(seen.size(), 100u);
    EXPECT_EQ(replication_seed(7, "test1", 3), replication_seed(7, "test1", 3));
    EXPECT_NE(replication_seed(7, "test1", 3), replication_seed(7, "test2", 3));
    EXPECT_NE(replication_seed(7, "test1", 3), replication_seed(8, "test1", 3));
}

TEST(ExperimentSpec, Validation) {
    auto spec = small_spec({Method::EbVi});
    spec.replications = 0;
    EXPECT_THROW(spec.validate(), InputError);
    spec = small_spec({});
    EXPECT_THROW(spec.validate(), InputError);
}

TEST(RunExperiment, WorkerCountInvariant) {
    auto spec = small_spec({Method::EbVi, Method::EbMcmc, Method::Pilot}, 4);
    const auto one = run_experiment(spec);
    spec.workers = 3;
    const auto three = run_experiment(spec);
    const EmitOptions no_time{false};
    EXPECT_EQ(to_json(one, no_time).dump(), to_json(three, no_time).dump());
}

TEST(RunExperiment, PilotUsesPreJitterPattern) {
    const auto res = run_experiment(small_spec({Method::Pilot}));
    for (const auto& rep : res.reps) {
        const auto& rec = rep.methods.at(0);
        std::vector<int> nz;
        for (int j = 0; j < rec.scores.size(); ++j)
            if (rec.scores[j] != 0.0) nz.push_back(j);
        EXPECT_EQ(rec.s_hat, Configuration(nz));
    }
}

TEST(RunExperiment, FailuresAreRecorded) {
    auto spec = small_spec({Method::EbVi, Method::EbMcmc}, 2);
    spec.chain.smax = 60;  // not below n: every chain rejects its configuration
    const auto res = run_experiment(spec);
    ASSERT_EQ(res.reps.size(), 2u);
    for (const auto& rep : res.reps) {
        EXPECT_TRUE(rep.methods[0].error.empty());
        EXPECT_FALSE(rep.methods[1].error.empty());
    }
    // Methods with no successful replication are left out of the aggregates.
    ASSERT_EQ(res.aggregates.size(), 1u);
    EXPECT_EQ(res.aggregates[0].rep_count, 2);
}

TEST(CompareViMcmc, DistanceFromRawVectors) {
    const auto cmp = compare_vi_mcmc(small_spec({Method::EbVi, Method::EbMcmc}, 3));
    ASSERT_EQ(cmp.phi_runs.rows(), 3);
    EXPECT_DOUBLE_EQ(cmp.d, metrics::d_distance(cmp.phi_runs, cmp.pi_runs));
    EXPECT_EQ(metrics::d_distance(cmp.phi_runs, cmp.phi_runs), 0.0);
    for (int r = 0; r < 3; ++r) {
        EXPECT_EQ(Vector(cmp.phi_runs.row(r).transpose()), cmp.run.reps[r].methods[0].scores);
        EXPECT_EQ(Vector(cmp.pi_runs.row(r).transpose()), cmp.run.reps[r].methods[1].scores);
    }
}

TEST(Emit, EmptyResultsGiveHeaderOnly) {
    const auto csv = aggregate_csv({});
    EXPECT_EQ(csv,
              "scenario,method,rep_count,tpr_mean,tpr_sd,fdr_mean,fdr_sd,tnr_mean,tnr_sd,mcc_mean,mcc_sd,"
              "time_mean_s\n");
}

TEST(Emit, JsonRoundTripAndCsvMeans) {
    const auto res = run_experiment(small_spec({Method::EbVi, Method::Pilot}, 4));
    const fs::path stem = fs::temp_directory_path() / "ebvi_emit_test";
    const auto written = emit({res}, "both", stem);
    ASSERT_EQ(written.size(), 2u);

    const auto back = run_result_from_json(Json::parse(slurp(stem.string() + ".json")).at(0));
    EXPECT_EQ(to_json(back).dump(), to_json(res).dump());

    // Recompute the EB-VI TPR mean from the per-replication JSON.
    const Json j = Json::parse(slurp(stem.string() + ".json")).at(0);
    double sum = 0.0;
    int count = 0;
    for (const auto& rep : j["replications"]) {
        sum += rep["methods"][0]["tpr"].get<double>();
        ++count;
    }
    std::istringstream csv(slurp(stem.string() + ".csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 12u);
    EXPECT_EQ(cells[1], "ebvi");
    EXPECT_DOUBLE_EQ(std::stod(cells[3]), sum / count);
}

TEST(Emit, ByteStableAndRejectsBadFormat) {
    const auto res = run_experiment(small_spec({Method::EbVi}, 2));
    const fs::path a = fs::temp_directory_path() / "ebvi_emit_a";
    const fs::path b = fs::temp_directory_path() / "ebvi_emit_b";
    emit({res}, "json", a);
    emit({res}, "json", b);
    EXPECT_EQ(slurp(a.string() + ".json"), slurp(b.string() + ".json"));
    EXPECT_THROW(emit({res}, "xml", a), InputError);
    // A regular file where a directory is expected cannot be written through.
    EXPECT_THROW(emit({res}, "csv", a.string() + ".json/x"), InputError);
}

TEST(Serialize, CaviAndChainShapes) {
    cavi::CaviResult r;
    r.phi_hat = Vector::Constant(2, 0.25);
    r.omega = Vector::Zero(2);
    r.objective_trace = {1.0, 2.0};
    r.sweeps = 2;
    r.stopped = cavi::StopReason::Converged;
    cavi::Selection sel;
    const Json j = to_json(r, sel);
    for (const char* key : {"phi", "omega", "selected", "objective_trace", "sweeps", "stopped_reason"})
        EXPECT_TRUE(j.contains(key)) << key;
    mcmc::ChainResult c;
    c.inclusion = Vector::Zero(3);
    const Json k = to_json(c);
    for (const char* key : {"inclusion", "accept_rate", "visited", "map_config"}) EXPECT_TRUE(k.contains(key)) << key;
    EXPECT_EQ(format_number(std::nan("")), "NA");
    EXPECT_EQ(format_number(0.1), "0.1");
}
