#include "ebvi/serialize.hpp"

#include <cmath>
#include <limits>

namespace ebvi {

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const Json& j) {
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] =
            j[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : j[i].get<double>();
    return v;
}

Json config_to_json(const Configuration& s) { return Json(s.index_vector()); }

std::string format_number(double v) {
    if (std::isnan(v)) return "NA";
    return Json(v).dump();
}

Json to_json(const PosteriorTable& table) {
    Json entries = Json::array();
    for (const auto& e : table.entries)
        entries.push_back({{"indices", config_to_json(e.config)}, {"prob", e.prob}});
    return {{"entries", entries},
            {"log_norm_const", table.log_norm_const},
            {"inclusion", vector_to_json(table.inclusion)}};
}

Json to_json(const cavi::CaviResult& res, const cavi::Selection& sel) {
    Json out = {{"phi", vector_to_json(res.phi_hat)},
                {"omega", vector_to_json(res.omega)},
                {"selected", config_to_json(sel.s_hat)},
                {"objective_trace", res.objective_trace},
                {"sweeps", res.sweeps},
                {"stopped_reason", cavi::to_string(res.stopped)}};
    out["refit_available"] = sel.refit_available;
    out["beta_refit"] = sel.refit_available ? vector_to_json(sel.beta_refit) : Json::array();
    return out;
}

Json to_json(const mcmc::ChainResult& res) {
    return {{"inclusion", vector_to_json(res.inclusion)},
            {"accept_rate", res.accept_rate},
            {"visited", res.visited},
            {"map_config", config_to_json(res.map_config)}};
}

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> optional_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

Json summary_json(const bench::Summary& s) {
    auto num = [](double v) { return std::isnan(v) ? Json(nullptr) : Json(v); };
    return {{"mean", num(s.mean)}, {"sd", num(s.sd)}};
}

}  // namespace

Json to_json(const bench::RunResult& result, const bench::EmitOptions& opts) {
    Json methods = Json::array();
    for (auto m : result.methods) methods.push_back(bench::to_string(m));

    Json reps = Json::array();
    for (const auto& rep : result.reps) {
        Json recs = Json::array();
        for (const auto& rec : rep.methods) {
            Json r = {{"method", bench::to_string(rec.method)},
                      {"error", rec.error},
                      {"scores", vector_to_json(rec.scores)},
                      {"selected", config_to_json(rec.s_hat)},
                      {"confusion",
                       {{"tp", rec.confusion.tp},
                        {"fp", rec.confusion.fp},
                        {"fn", rec.confusion.fn},
                        {"tn", rec.confusion.tn}}},
                      {"tpr", optional_number(rec.tpr)},
                      {"fdr", rec.fdr},
                      {"tnr", optional_number(rec.tnr)},
                      {"mcc", rec.mcc},
                      {"wall_time_s", opts.include_timing ? rec.wall_time_s : 0.0},
                      {"sweeps", rec.sweeps},
                      {"accept_rate", rec.accept_rate},
                      {"lambda_used", rec.lambda_used}};
            recs.push_back(std::move(r));
        }
        reps.push_back({{"rep", rep.rep}, {"seed", rep.seed}, {"error", rep.error}, {"methods", recs}});
    }

    Json aggs = Json::array();
    for (const auto& a : result.aggregates) {
        aggs.push_back({{"method", bench::to_string(a.method)},
                        {"rep_count", a.rep_count},
                        {"tpr", summary_json(a.tpr)},
                        {"fdr", summary_json(a.fdr)},
                        {"tnr", summary_json(a.tnr)},
                        {"mcc", summary_json(a.mcc)},
                        {"time_mean_s", opts.include_timing ? a.time_mean_s : 0.0}});
    }
    return {{"scenario", result.scenario_id},
            {"methods", methods},
            {"replications", reps},
            {"aggregates", aggs}};
}

bench::RunResult run_result_from_json(const Json& j) {
    bench::RunResult out;
    out.scenario_id = j.at("scenario").get<std::string>();
    for (const auto& m : j.at("methods")) out.methods.push_back(bench::method_from_string(m.get<std::string>()));
    for (const auto& rj : j.at("replications")) {
        bench::ReplicationRecord rep;
        rep.rep = rj.at("rep").get<int>();
        rep.seed = rj.at("seed").get<std::uint64_t>();
        rep.error = rj.at("error").get<std::string>();
        for (const auto& mj : rj.at("methods")) {
            bench::MethodRecord rec;
            rec.method = bench::method_from_string(mj.at("method").get<std::string>());
            rec.error = mj.at("error").get<std::string>();
            rec.scores = vector_from_json(mj.at("scores"));
            rec.s_hat = Configuration(mj.at("selected").get<std::vector<int>>());
            const auto& c = mj.at("confusion");
            rec.confusion = {c.at("tp").get<int>(), c.at("fp").get<int>(), c.at("fn").get<int>(),
                             c.at("tn").get<int>()};
            rec.tpr = optional_from(mj.at("tpr"));
            rec.fdr = mj.at("fdr").get<double>();
            rec.tnr = optional_from(mj.at("tnr"));
            rec.mcc = mj.at("mcc").get<double>();
            rec.wall_time_s = mj.at("wall_time_s").get<double>();
            rec.sweeps = mj.at("sweeps").get<int>();
            rec.accept_rate = mj.at("accept_rate").get<double>();
            rec.lambda_used = mj.at("lambda_used").get<double>();
            rep.methods.push_back(std::move(rec));
        }
        out.reps.push_back(std::move(rep));
    }
    out.aggregates = bench::aggregate(out.reps, out.methods);
    return out;
}

}  // namespace ebvi
