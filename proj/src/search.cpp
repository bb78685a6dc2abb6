// SPDX-License-Identifier: Apache-2.0
#include "fogsim/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fogsim::search {

const char* factor_name(Factor f) {
  switch (f) {
    case Factor::kSlowLead: return "F1";
    case Factor::kRoadWater: return "F2";
    case Factor::kSmallTarget: return "F3";
    case Factor::kTallVehicle: return "F4";
    case Factor::kSlope: return "F5";
  }
  return "?";
}

Factor factor_from_name(const std::string& name) {
  for (Factor f : {Factor::kSlowLead, Factor::kRoadWater, Factor::kSmallTarget,
                   Factor::kTallVehicle, Factor::kSlope})
    if (name == factor_name(f)) return f;
  throw std::invalid_argument("unknown factor: " + name);
}

const char* mutation_name(MutationKind k) {
  switch (k) {
    case MutationKind::kAddNpc: return "add-npc";
    case MutationKind::kChangeModel: return "change-model";
    case MutationKind::kChangeSpeed: return "change-speed";
    case MutationKind::kChangeWeather: return "change-weather";
  }
  return "?";
}

ObjectiveBreakdown objective(const world::RunStats& stats, double c1, double c2,
                             double contact_threshold) {
  if (stats.n_frame < 1) throw std::invalid_argument("objective needs at least one frame");
  double d = stats.d_min;
  if (!(d > 0.0)) d = contact_threshold;
  ObjectiveBreakdown b;
  b.c1 = c1;
  b.c2 = c2;
  b.perception_term = c1 * static_cast<double>(stats.n_fp + stats.n_fn + stats.n_fog) /
                      static_cast<double>(stats.n_frame);
  b.proximity_term = c2 / d;
  b.o = -(b.perception_term + b.proximity_term);
  return b;
}

namespace {

std::vector<std::string> models_matching(bool small, bool tall) {
  std::vector<std::string> out;
  for (const auto& m : world::npc_catalog()) {
    if (small && !m.small_target) continue;
    if (tall && !m.tall_vehicle) continue;
    out.push_back(m.name);
  }
  return out;
}

double clamp_model_speed(const std::string& model, double v) {
  const auto& m = world::npc_model(model);
  if (m.pedestrian) return std::clamp(v, 0.0, 2.5);
  if (m.name == "bicycle") return std::clamp(v, 0.0, 7.0);
  return std::clamp(v, 0.0, 16.0);
}

world::NpcConfig random_npc(const world::RoadMap& map, Rng& rng,
                            const std::vector<std::string>& model_pool) {
  world::NpcConfig n;
  n.model = model_pool[rng.next_below(model_pool.size())];
  const auto& routes = map.routes();
  const auto& r = routes[rng.next_below(routes.size())];
  n.start = r.start;
  n.end = r.end;
  n.start_offset = rng.uniform(0.0, 0.6 * r.length());
  n.speed = clamp_model_speed(n.model, rng.uniform(0.5, 14.0));
  return n;
}

// Lead vehicle on the ego's own route, slower than the ego target speed.
world::NpcConfig slow_lead_npc(const world::ScenarioConfig& s, const world::RoadMap& map,
                               Rng& rng) {
  world::NpcConfig n;
  auto pool = models_matching(false, false);
  n.model = pool[rng.next_below(pool.size())];
  if (world::npc_model(n.model).pedestrian) n.model = "sedan";
  n.start = s.ego_start;
  n.end = s.ego_end;
  const auto* r = map.find_route(n.start, n.end);
  n.start_offset = rng.uniform(15.0, std::min(40.0, 0.7 * r->length()));
  n.speed = rng.uniform(1.0, std::max(2.0, 0.4 * s.ego_target_speed));
  return n;
}

}  // namespace

world::ScenarioConfig init_unique_scenario(const History& history, const FactorSet& factors,
                                           const std::string& map_id, Rng& rng) {
  const auto& map = world::RoadMap::get(map_id);
  std::vector<const world::Route*> unused;
  for (const auto& r : map.routes())
    if (!history.count({map_id, r.start, r.end})) unused.push_back(&r);
  if (unused.empty())
    throw SearchSpaceExhausted("all ego (start,end) pairs on " + map_id + " are used");
  const world::Route* route = unused[rng.next_below(unused.size())];

  world::ScenarioConfig s;
  s.map_id = map_id;
  s.ego_start = route->start;
  s.ego_end = route->end;
  s.ego_target_speed = rng.uniform(10.0, 14.0);
  s.seed = rng.next_u64() >> 12;  // keep within exact-double range for JSON
  s.weather.mor = 30.0;           // fog density held fixed across the search
  s.weather.sun_altitude_deg = rng.uniform(-20.0, 60.0);
  s.weather.road_water = rng.uniform(0.0, 0.4);

  auto has = [&](Factor f) { return std::find(factors.begin(), factors.end(), f) != factors.end(); };
  if (has(Factor::kRoadWater)) {
    s.weather.sun_altitude_deg = rng.uniform(-40.0, -5.0);
    s.weather.road_water = rng.uniform(0.6, 1.0);
  }

  int n_npc = static_cast<int>(rng.next_below(3));
  for (int i = 0; i < n_npc; ++i) {
    bool guided = !factors.empty() && rng.chance(0.7);
    if (guided) {
      Factor f = factors[rng.next_below(factors.size())];
      switch (f) {
        case Factor::kSlowLead:
          s.npcs.push_back(slow_lead_npc(s, map, rng));
          continue;
        case Factor::kSmallTarget:
          s.npcs.push_back(random_npc(map, rng, models_matching(true, false)));
          continue;
        case Factor::kTallVehicle:
          s.npcs.push_back(random_npc(map, rng, models_matching(false, true)));
          continue;
        default:
          break;  // F2/F5 constrain weather/terrain, not the roster
      }
    }
    s.npcs.push_back(random_npc(map, rng, models_matching(false, false)));
  }
  s.validate();
  return s;
}

world::ScenarioConfig mutate(const world::ScenarioConfig& s, double temperature,
                             const FactorSet& factors, Rng& rng, MutationInfo* info) {
  const auto& map = world::RoadMap::get(s.map_id);
  for (int attempt = 0; attempt < 8; ++attempt) {
    world::ScenarioConfig m = s;
    MutationInfo mi;
    std::optional<Factor> guide;
    if (!factors.empty() && rng.chance(0.5)) guide = factors[rng.next_below(factors.size())];

    MutationKind kind;
    if (rng.chance(p_add_npc(temperature)) && m.npcs.size() < 6)
      kind = MutationKind::kAddNpc;
    else {
      switch (rng.next_below(3)) {
        case 0: kind = MutationKind::kChangeModel; break;
        case 1: kind = MutationKind::kChangeSpeed; break;
        default: kind = MutationKind::kChangeWeather; break;
      }
    }
    if (m.npcs.empty() &&
        (kind == MutationKind::kChangeModel || kind == MutationKind::kChangeSpeed))
      kind = MutationKind::kAddNpc;
    mi.kind = kind;

    switch (kind) {
      case MutationKind::kAddNpc: {
        if (guide == Factor::kSlowLead) {
          m.npcs.push_back(slow_lead_npc(m, map, rng));
          mi.factor = guide;
        } else if (guide == Factor::kSmallTarget) {
          m.npcs.push_back(random_npc(map, rng, models_matching(true, false)));
          mi.factor = guide;
        } else if (guide == Factor::kTallVehicle) {
          m.npcs.push_back(random_npc(map, rng, models_matching(false, true)));
          mi.factor = guide;
        } else {
          m.npcs.push_back(random_npc(map, rng, models_matching(false, false)));
        }
        break;
      }
      case MutationKind::kChangeModel: {
        auto& n = m.npcs[rng.next_below(m.npcs.size())];
        std::vector<std::string> pool;
        if (guide == Factor::kSmallTarget) {
          pool = models_matching(true, false);
          mi.factor = guide;
        } else if (guide == Factor::kTallVehicle) {
          pool = models_matching(false, true);
          mi.factor = guide;
        } else {
          pool = models_matching(false, false);
        }
        n.model = pool[rng.next_below(pool.size())];
        n.speed = clamp_model_speed(n.model, n.speed);
        break;
      }
      case MutationKind::kChangeSpeed: {
        auto& n = m.npcs[rng.next_below(m.npcs.size())];
        if (guide == Factor::kSlowLead) {
          n.speed = clamp_model_speed(n.model, rng.uniform(0.5, std::max(1.0, n.speed)));
          mi.factor = guide;
        } else {
          n.speed = clamp_model_speed(n.model, rng.uniform(0.0, 14.0));
        }
        break;
      }
      case MutationKind::kChangeWeather: {
        if (guide == Factor::kRoadWater) {
          m.weather.sun_altitude_deg = rng.uniform(-40.0, -5.0);
          m.weather.road_water = rng.uniform(0.6, 1.0);
          mi.factor = guide;
        } else {
          m.weather.sun_altitude_deg = rng.uniform(-40.0, 60.0);
          m.weather.road_water = rng.uniform(0.0, 1.0);
        }
        break;  // fog density stays fixed
      }
    }
    try {
      m.validate();
    } catch (const std::invalid_argument&) {
      continue;  // resample
    }
    if (info) *info = mi;
    return m;
  }
  // retries exhausted: fall back to an always-valid weather perturbation
  world::ScenarioConfig m = s;
  m.weather.sun_altitude_deg = rng.uniform(-40.0, 60.0);
  m.weather.road_water = rng.uniform(0.0, 1.0);
  if (info) *info = {MutationKind::kChangeWeather, std::nullopt};
  return m;
}

bool accept(double o_old, double o_new, double temperature, Rng& rng) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  if (o_new < o_old) return true;
  return rng.chance(std::exp((o_old - o_new) / temperature));
}

std::string scenario_hash(const world::ScenarioConfig& s) {
  char buf[256];
  std::string canon = s.map_id + "|" + s.ego_start + ">" + s.ego_end;
  std::snprintf(buf, sizeof buf, "|v%.17g|seed%llu", s.ego_target_speed,
                static_cast<unsigned long long>(s.seed));
  canon += buf;
  for (const auto& n : s.npcs) {
    std::snprintf(buf, sizeof buf, "|%s@%s>%s+%.17g*%.17g", n.model.c_str(), n.start.c_str(),
                  n.end.c_str(), n.start_offset, n.speed);
    canon += buf;
  }
  std::snprintf(buf, sizeof buf, "|w%.17g/%.17g/%.17g", s.weather.mor, s.weather.sun_altitude_deg,
                s.weather.road_water);
  canon += buf;
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_str(canon)));
  return buf;
}

DiscoverResult discover(const FactorSet& factors, int budget, const DiscoverOptions& opts,
                        const EpisodeRunner& run) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  DiscoverResult res;
  History history;
  const AnnealConfig& an = opts.anneal;

  auto fake_objective = [&](Rng& r) { return -r.next_double(); };

  for (int outer = 0; outer < an.max_scenario && res.episodes_used < budget; ++outer) {
    Rng rng_init = derive_rng(opts.master_seed, "init", static_cast<std::uint64_t>(outer));
    Rng rng_mut = derive_rng(opts.master_seed, "mutate", static_cast<std::uint64_t>(outer));
    Rng rng_acc = derive_rng(opts.master_seed, "accept", static_cast<std::uint64_t>(outer));
    Rng rng_obj = derive_rng(opts.master_seed, "randobj", static_cast<std::uint64_t>(outer));

    world::ScenarioConfig s;
    try {
      s = init_unique_scenario(history, factors, opts.map_id, rng_init);
    } catch (const SearchSpaceExhausted&) {
      res.pair_space_exhausted = true;
      break;
    }
    history.insert({s.map_id, s.ego_start, s.ego_end});

    world::RunStats stats = run(s);
    ++res.episodes_used;
    double o = opts.objective_mode == ObjectiveMode::kRandom
                   ? fake_objective(rng_obj)
                   : objective(stats, an.c1, an.c2, opts.contact_threshold).o;
    res.log.push_back({res.episodes_used, outer, scenario_hash(s), "init", "", 0.0, o, true, an.t0,
                       stats.corner_case()});
    if (stats.corner_case()) {
      res.cases.push_back({s, {}, s.seed, res.episodes_used, outer});
      continue;
    }

    bool found = false;
    double temperature = an.t0;
    while (temperature >= an.t_min && !found) {
      for (int cycle = 0; cycle < an.max_cycle; ++cycle) {
        if (res.episodes_used >= budget) {
          res.budget_exhausted_mid_anneal = true;
          return res;
        }
        MutationInfo mi;
        world::ScenarioConfig cand = mutate(s, temperature, factors, rng_mut, &mi);
        world::RunStats cstats = run(cand);
        ++res.episodes_used;
        double o_new = opts.objective_mode == ObjectiveMode::kRandom
                           ? fake_objective(rng_obj)
                           : objective(cstats, an.c1, an.c2, opts.contact_threshold).o;
        bool corner = cstats.corner_case();
        bool took = false;
        if (corner) {
          took = true;
        } else if (opts.acceptance == AcceptanceMode::kAlwaysAccept) {
          took = true;
        } else {
          took = accept(o, o_new, temperature, rng_acc);
        }
        res.log.push_back({res.episodes_used, outer, scenario_hash(cand),
                           mutation_name(mi.kind), mi.factor ? factor_name(*mi.factor) : "", o,
                           o_new, took, temperature, corner});
        if (corner) {
          std::vector<std::string> provoking;
          if (mi.factor) provoking.push_back(factor_name(*mi.factor));
          res.cases.push_back({cand, provoking, cand.seed, res.episodes_used, outer});
          found = true;
          break;
        }
        if (took) {
          s = cand;
          o = o_new;  // refresh the reference objective on acceptance
        }
      }
      temperature *= an.r_cool;
    }
  }
  return res;
}

}  // namespace fogsim::search
