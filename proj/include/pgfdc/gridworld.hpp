#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pgfdc/hash.hpp"
#include "pgfdc/tensor.hpp"

namespace pgfdc {

enum class EnvId { gridworld14, keyworld14, fourrooms };

inline const char* to_string(EnvId id) {
  switch (id) {
    case EnvId::gridworld14: return "gridworld14";
    case EnvId::keyworld14: return "keyworld14";
    case EnvId::fourrooms: return "fourrooms";
  }
  throw std::invalid_argument("unknown env id");
}

inline EnvId env_id_from_string(const std::string& s) {
  if (s == "gridworld14") return EnvId::gridworld14;
  if (s == "keyworld14") return EnvId::keyworld14;
  if (s == "fourrooms") return EnvId::fourrooms;
  throw std::invalid_argument("unknown environment '" + s +
                              "' (expected gridworld14, keyworld14, or fourrooms)");
}

// Headings are clockwise from north.
inline constexpr int kHeadingN = 0, kHeadingE = 1, kHeadingS = 2, kHeadingW = 3;
inline constexpr int kActLeft = 0, kActRight = 1, kActForward = 2, kActPickup = 3,
                     kActToggle = 4;

// Grid cells: '#' wall, '.' floor, 'D' door, 'K' key, 'G' goal.
struct EnvSpec {
  EnvId id = EnvId::gridworld14;
  int height = 0;
  int width = 0;
  int action_count = 0;
  int n_max = 0;
  std::vector<std::string> grid;
  int start_row = 1;
  int start_col = 1;
  int start_heading = kHeadingE;

  static EnvSpec make(EnvId id);

  // Canonical serialization of everything that defines the layout; demos
  // carry its hash so stale files are rejected.
  std::string layout_text() const {
    std::string s = std::string(to_string(id)) + "\n";
    s += std::to_string(height) + "x" + std::to_string(width) + " actions=" +
         std::to_string(action_count) + " n_max=" + std::to_string(n_max) + "\n";
    s += "start=" + std::to_string(start_row) + "," + std::to_string(start_col) + "," +
         std::to_string(start_heading) + "\n";
    for (const std::string& row : grid) s += row + "\n";
    return s;
  }
  std::uint64_t layout_hash() const { return fnv1a64(layout_text()); }
};

inline EnvSpec EnvSpec::make(EnvId id) {
  EnvSpec s;
  s.id = id;
  switch (id) {
    case EnvId::gridworld14: {
      s.height = s.width = 14;
      s.action_count = 3;
      s.n_max = 192;
      s.grid.assign(14, std::string(14, '.'));
      for (int i = 0; i < 14; ++i) {
        s.grid[0][i] = s.grid[13][i] = '#';
        s.grid[i][0] = s.grid[i][13] = '#';
      }
      s.grid[12][12] = 'G';
      break;
    }
    case EnvId::keyworld14: {
      s.height = s.width = 14;
      s.action_count = 5;
      s.n_max = 1960;
      s.grid.assign(14, std::string(14, '.'));
      for (int i = 0; i < 14; ++i) {
        s.grid[0][i] = s.grid[13][i] = '#';
        s.grid[i][0] = s.grid[i][13] = '#';
      }
      for (int r = 1; r <= 12; ++r) s.grid[r][7] = '#';  // dividing wall
      s.grid[6][7] = 'D';                                // locked door
      s.grid[3][3] = 'K';
      s.grid[12][12] = 'G';
      break;
    }
    case EnvId::fourrooms: {
      s.height = s.width = 15;
      s.action_count = 3;
      s.n_max = 1536;
      s.grid.assign(15, std::string(15, '.'));
      for (int i = 0; i < 15; ++i) {
        s.grid[0][i] = s.grid[14][i] = '#';
        s.grid[i][0] = s.grid[i][14] = '#';
      }
      for (int i = 0; i < 15; ++i) {
        s.grid[7][i] = '#';
        s.grid[i][7] = '#';
      }
      s.grid[7][3] = s.grid[7][11] = '.';  // doorways in the horizontal wall
      s.grid[3][7] = s.grid[11][7] = '.';  // doorways in the vertical wall
      s.grid[13][13] = 'G';
      break;
    }
  }
  s.start_row = 1;
  s.start_col = 1;
  s.start_heading = kHeadingE;
  return s;
}

struct AgentPose {
  int row = 0;
  int col = 0;
  int heading = kHeadingE;
  bool carrying_key = false;
  bool door_open = false;
};

struct WorldState {
  AgentPose pose;
  int n_t = 0;
};

namespace grids {

inline char raw_cell(const EnvSpec& spec, int r, int c) {
  if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) return '#';
  return spec.grid[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
}

// Cell content as the agent experiences it: a picked-up key leaves floor.
inline char effective_cell(const EnvSpec& spec, const AgentPose& p, int r, int c) {
  const char raw = raw_cell(spec, r, c);
  if (raw == 'K' && p.carrying_key) return '.';
  return raw;
}

inline std::pair<int, int> front_cell(const AgentPose& p) {
  switch (p.heading) {
    case kHeadingN: return {p.row - 1, p.col};
    case kHeadingE: return {p.row, p.col + 1};
    case kHeadingS: return {p.row + 1, p.col};
    default: return {p.row, p.col - 1};
  }
}

inline bool passable(const EnvSpec& spec, const AgentPose& p, int r, int c) {
  switch (effective_cell(spec, p, r, c)) {
    case '.':
    case 'G': return true;
    case 'D': return p.door_open;
    default: return false;  // walls and keys block
  }
}

// Pure transition rule shared by the environment and the planner. Blocked
// moves and ineffective pickups/toggles leave the pose unchanged.
inline AgentPose apply_action(const EnvSpec& spec, AgentPose p, int action) {
  switch (action) {
    case kActLeft: p.heading = (p.heading + 3) % 4; break;
    case kActRight: p.heading = (p.heading + 1) % 4; break;
    case kActForward: {
      const auto [r, c] = front_cell(p);
      if (passable(spec, p, r, c)) {
        p.row = r;
        p.col = c;
      }
      break;
    }
    case kActPickup: {
      const auto [r, c] = front_cell(p);
      if (!p.carrying_key && effective_cell(spec, p, r, c) == 'K') p.carrying_key = true;
      break;
    }
    case kActToggle: {
      const auto [r, c] = front_cell(p);
      if (raw_cell(spec, r, c) == 'D' && p.carrying_key && !p.door_open) p.door_open = true;
      break;
    }
    default: break;
  }
  return p;
}

}  // namespace grids

// Deterministic gridworld with an egocentric 3x7x7 observation: a 7x7 window
// reaching 6 cells ahead and 3 to each side, the agent drawn at the window's
// bottom-center. Channel 0 holds object-type codes, channel 1 color codes
// (both /5), channel 2 object state (/2); cells beyond the border read as
// walls, so every entry lies in [0,1].
class GridEnv {
 public:
  explicit GridEnv(EnvSpec spec) : spec_(std::move(spec)) { reset(); }
  explicit GridEnv(EnvId id) : GridEnv(EnvSpec::make(id)) {}

  Tensor reset(std::uint64_t seed = 0) {
    seed_ = seed;
    state_.pose = AgentPose{spec_.start_row, spec_.start_col, spec_.start_heading, false, false};
    state_.n_t = 0;
    done_ = false;
    return observe();
  }

  struct StepResult {
    Tensor obs;
    double reward = 0.0;
    bool done = false;
  };

  StepResult step(int action) {
    if (done_) throw std::logic_error("step() after episode end; call reset() first");
    if (action < 0 || action >= spec_.action_count)
      throw std::invalid_argument("action " + std::to_string(action) + " out of range [0," +
                                  std::to_string(spec_.action_count) + ") for " +
                                  to_string(spec_.id));
    state_.pose = grids::apply_action(spec_, state_.pose, action);
    state_.n_t += 1;
    StepResult res;
    if (grids::raw_cell(spec_, state_.pose.row, state_.pose.col) == 'G') {
      res.reward = 1.0 - 0.9 * (static_cast<double>(state_.n_t) / spec_.n_max);
      done_ = true;
    } else if (state_.n_t >= spec_.n_max) {
      done_ = true;
    }
    res.done = done_;
    res.obs = observe();
    return res;
  }

  Tensor observe() const {
    // Codes: type {floor 0, wall 1, door 2, key 3, goal 4, agent 5}; color
    // mirrors the type for static objects, and on the agent cell shows what
    // it carries; state is 2 for a locked door, 0 otherwise.
    Tensor obs = Tensor::zeros({3, 7, 7});
    const AgentPose& p = state_.pose;
    for (int vr = 0; vr < 7; ++vr)
      for (int vc = 0; vc < 7; ++vc) {
        const auto [wr, wc] = view_to_world(vr, vc);
        int type = 0, color = 0, st = 0;
        if (vr == 6 && vc == 3) {
          type = 5;
          color = p.carrying_key ? 3 : 0;
        } else {
          switch (grids::effective_cell(spec_, p, wr, wc)) {
            case '.': type = 0; break;
            case '#': type = 1; color = 1; break;
            case 'D':
              type = 2;
              color = 2;
              st = p.door_open ? 0 : 2;
              break;
            case 'K': type = 3; color = 3; break;
            case 'G': type = 4; color = 4; break;
            default: break;
          }
        }
        const int at = vr * 7 + vc;
        obs.data()[0 * 49 + at] = type / 5.0;
        obs.data()[1 * 49 + at] = color / 5.0;
        obs.data()[2 * 49 + at] = st / 2.0;
      }
    return obs;
  }

  std::string render_ascii() const {
    static const char heading_chars[4] = {'^', '>', 'v', '<'};
    std::string out;
    for (int r = 0; r < spec_.height; ++r) {
      for (int c = 0; c < spec_.width; ++c) {
        char ch = grids::effective_cell(spec_, state_.pose, r, c);
        if (ch == 'D') ch = state_.pose.door_open ? '/' : 'D';
        if (r == state_.pose.row && c == state_.pose.col)
          ch = heading_chars[state_.pose.heading];
        out += ch;
      }
      out += '\n';
    }
    out += "steps=" + std::to_string(state_.n_t) +
           " carrying=" + std::to_string(state_.pose.carrying_key ? 1 : 0) + " door=";
    if (spec_.id == EnvId::keyworld14)
      out += state_.pose.door_open ? "open" : "locked";
    else
      out += "none";
    out += '\n';
    return out;
  }

  const EnvSpec& spec() const { return spec_; }
  const WorldState& state() const { return state_; }
  std::uint64_t seed() const { return seed_; }
  bool done() const { return done_; }

 private:
  std::pair<int, int> view_to_world(int vr, int vc) const {
    const AgentPose& p = state_.pose;
    const int ahead = 6 - vr;   // cells in front of the agent
    const int side = vc - 3;    // negative = agent's left
    switch (p.heading) {
      case kHeadingN: return {p.row - ahead, p.col + side};
      case kHeadingE: return {p.row + side, p.col + ahead};
      case kHeadingS: return {p.row + ahead, p.col - side};
      default: return {p.row - side, p.col - ahead};
    }
  }

  EnvSpec spec_;
  WorldState state_;
  std::uint64_t seed_ = 0;
  bool done_ = false;
};

}  // namespace pgfdc
