#pragma once

#include <json.hpp>

#include "ebvi/bench.hpp"
#include "ebvi/cavi.hpp"
#include "ebvi/mcmc.hpp"
#include "ebvi/posterior.hpp"

namespace ebvi {

using Json = nlohmann::ordered_json;

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);
Json config_to_json(const Configuration& s);

/// Shortest round-trip text of a double, "NA" for NaN.
std::string format_number(double v);

Json to_json(const PosteriorTable& table);
Json to_json(const cavi::CaviResult& res, const cavi::Selection& sel);
Json to_json(const mcmc::ChainResult& res);

Json to_json(const bench::RunResult& result, const bench::EmitOptions& opts = {});
bench::RunResult run_result_from_json(const Json& j);

}  // namespace ebvi
