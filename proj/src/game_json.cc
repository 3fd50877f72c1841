#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "stackgame/game_model.hpp"

namespace stackgame {

using nlohmann::json;

std::string game_to_json(const GameSpec& spec) {
  json reward_l = json::array();
  json reward_f = json::array();
  json trans = json::array();
  for (int x = 0; x < spec.num_states; ++x) {
    json rl = json::array(), rf = json::array(), tr = json::array();
    for (int al = 0; al < spec.num_leader_actions; ++al) {
      json rl_row = json::array(), rf_row = json::array(), tr_row = json::array();
      for (int af = 0; af < spec.num_follower_actions; ++af) {
        const JointAction a{al, af};
        rl_row.push_back(spec.reward_leader[spec.reward_index(x, a)]);
        rf_row.push_back(spec.reward_follower[spec.reward_index(x, a)]);
        const double* row = spec.transition_row(x, a);
        tr_row.push_back(std::vector<double>(row, row + spec.num_states));
      }
      rl.push_back(std::move(rl_row));
      rf.push_back(std::move(rf_row));
      tr.push_back(std::move(tr_row));
    }
    reward_l.push_back(std::move(rl));
    reward_f.push_back(std::move(rf));
    trans.push_back(std::move(tr));
  }
  json doc = {
      {"format", 1},
      {"num_states", spec.num_states},
      {"num_leader_actions", spec.num_leader_actions},
      {"num_follower_actions", spec.num_follower_actions},
      {"reward_leader", reward_l},
      {"reward_follower", reward_f},
      {"transition", trans},
      {"initial_dist", spec.initial_dist},
      {"horizon", spec.horizon},
      {"discount", spec.discount},
  };
  return doc.dump(2);
}

namespace {

const json& field(const json& doc, const char* name) {
  if (!doc.contains(name)) throw std::invalid_argument(std::string("game JSON missing field '") + name + "'");
  return doc.at(name);
}

// Checks that `node` is an array of exactly `n` elements.
const json& sized(const json& node, int n, const std::string& what) {
  if (!node.is_array() || static_cast<int>(node.size()) != n) {
    throw std::invalid_argument("game JSON field '" + what + "' has wrong shape");
  }
  return node;
}

}  // namespace

GameSpec game_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed game JSON: ") + e.what());
  }
  try {
    if (field(doc, "format").get<int>() != 1) {
      throw std::invalid_argument("unsupported game JSON format version");
    }
    GameSpec g(field(doc, "num_states").get<int>(), field(doc, "num_leader_actions").get<int>(),
               field(doc, "num_follower_actions").get<int>(), field(doc, "horizon").get<int>(),
               field(doc, "discount").get<double>());
    const auto& rl = sized(field(doc, "reward_leader"), g.num_states, "reward_leader");
    const auto& rf = sized(field(doc, "reward_follower"), g.num_states, "reward_follower");
    const auto& tr = sized(field(doc, "transition"), g.num_states, "transition");
    for (int x = 0; x < g.num_states; ++x) {
      sized(rl[x], g.num_leader_actions, "reward_leader");
      sized(rf[x], g.num_leader_actions, "reward_follower");
      sized(tr[x], g.num_leader_actions, "transition");
      for (int al = 0; al < g.num_leader_actions; ++al) {
        sized(rl[x][al], g.num_follower_actions, "reward_leader");
        sized(rf[x][al], g.num_follower_actions, "reward_follower");
        sized(tr[x][al], g.num_follower_actions, "transition");
        for (int af = 0; af < g.num_follower_actions; ++af) {
          const JointAction a{al, af};
          g.reward_at(Player::kLeader, x, a) = rl[x][al][af].get<double>();
          g.reward_at(Player::kFollower, x, a) = rf[x][al][af].get<double>();
          const auto& col = sized(tr[x][al][af], g.num_states, "transition");
          for (int xn = 0; xn < g.num_states; ++xn) g.transition_at(xn, x, a) = col[xn].get<double>();
        }
      }
    }
    g.initial_dist = sized(field(doc, "initial_dist"), g.num_states, "initial_dist")
                         .get<std::vector<double>>();
    return g;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("game JSON type error: ") + e.what());
  }
}

GameSpec load_game(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open game file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return game_from_json(buf.str());
}

}  // namespace stackgame
