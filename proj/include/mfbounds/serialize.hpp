#pragma once

#include <json.hpp>
#include <set>
#include <string>

#include "mfbounds/dual_solver.hpp"
#include "mfbounds/lp_oracle.hpp"
#include "mfbounds/market.hpp"
#include "mfbounds/pricer.hpp"

namespace mfb {

using json = nlohmann::json;

/// Throws ErrorKind::Config when `object` has a key outside `allowed`.
void reject_unknown_keys(const json& object, const std::set<std::string>& allowed, const std::string& where);

json to_json(const MarketSpec& spec);
/// Accepts either a full "rho" matrix or a scalar "rho_offdiag".
MarketSpec market_from_json(const json& j);

json to_json(const TrainerConfig& config);
/// Missing keys keep their defaults from `base`.
TrainerConfig trainer_from_json(const json& j, TrainerConfig base = {});

json to_json(const PricedInstrument& instrument);
PricedInstrument instrument_from_json(const json& j, int dimension);

json to_json(const SlackStats& stats);

/// `trace_stride` > 1 keeps every stride-th trace entry (plus the last).
json to_json(const BoundResult& result, std::size_t trace_stride = 1);

/// Checkpoint: layout, parameters, Adam moments and step counter.
json to_json(const DualState& state);
DualState dual_state_from_json(const json& j);

json to_json(const PrimalResult& result);
json to_json(const FeasibilityReport& report);

}  // namespace mfb
