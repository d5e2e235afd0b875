#include "blockflow/config.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace blockflow {

const RewardConfig& GlobalConfig::reward_for(TaskKind kind) const {
  switch (kind) {
    case TaskKind::QA: return reward_qa;
    case TaskKind::Create: return reward_create;
    case TaskKind::Modify: return reward_modify;
    case TaskKind::Reconstruct: return reward_reconstruct;
  }
  return reward_qa;
}

namespace {

using nlohmann::json;

double number_at(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j.get<double>();
}

void apply_weights(RewardWeights& w, const json& section, const std::string& prefix) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = prefix + "." + key;
    if (key == "answer") w.answer = number_at(value, path);
    else if (key == "format") w.format = number_at(value, path);
    else if (key == "structure" || key == "fidelity") w.structure = number_at(value, path);
    else if (key == "executable") w.executable = number_at(value, path);
    else if (key == "tool_use") w.tool_use = number_at(value, path);
    else throw ConfigError("unknown config key '" + path + "'");
  }
}

void apply_schedule(ScheduleSpec& s, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "schedule." + key;
    if (key == "kind") {
      const std::string kind = value.is_string() ? value.get<std::string>() : "";
      if (kind == "linear") s.kind = ScheduleSpec::Kind::Linear;
      else if (kind == "exponential") s.kind = ScheduleSpec::Kind::Exponential;
      else if (kind == "non-replacement") s.kind = ScheduleSpec::Kind::NonReplacement;
      else throw ConfigError("unknown schedule kind '" + kind + "'");
    } else if (key == "p0") s.p0 = number_at(value, path);
    else if (key == "horizon") s.horizon = number_at(value, path);
    else if (key == "rate") s.rate = number_at(value, path);
    else throw ConfigError("unknown config key '" + path + "'");
  }
}

void apply_regrpo(RegrpoConfig& r, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "regrpo." + key;
    if (key == "group_size") r.group_size = static_cast<int>(number_at(value, path));
    else if (key == "subgroup1") r.subgroup1 = static_cast<int>(number_at(value, path));
    else if (key == "subgroup2") r.subgroup2 = static_cast<int>(number_at(value, path));
    else if (key == "clip") r.clip = number_at(value, path);
    else if (key == "kl_beta") r.kl_beta = number_at(value, path);
    else if (key == "inner_updates") r.inner_updates = static_cast<int>(number_at(value, path));
    else if (key == "advantage_mode") {
      const std::string mode = value.is_string() ? value.get<std::string>() : "";
      if (mode == "mean-baseline") r.advantage_mode = AdvantageMode::MeanBaseline;
      else if (mode == "std-normalized") r.advantage_mode = AdvantageMode::StdNormalized;
      else throw ConfigError("unknown advantage mode '" + mode + "'");
    } else if (key == "advantage_eps") r.advantage_eps = number_at(value, path);
    else if (key == "fail_threshold") r.fail_threshold = number_at(value, path);
    else if (key == "reflection_max_words")
      r.reflection_max_words = static_cast<int>(number_at(value, path));
    else throw ConfigError("unknown config key '" + path + "'");
  }
}

void apply_simlab(ComparisonConfig& c, const json& section) {
  for (const auto& [key, value] : section.items()) {
    const std::string path = "simlab." + key;
    if (key == "iterations") c.iterations = static_cast<int>(number_at(value, path));
    else if (key == "threshold") c.threshold = number_at(value, path);
    else if (key == "learning_rate") c.learning_rate = number_at(value, path);
    else if (key == "parallel_seeds") {
      if (!value.is_boolean()) throw ConfigError("config key '" + path + "' must be a boolean");
      c.parallel_seeds = value.get<bool>();
    } else throw ConfigError("unknown config key '" + path + "'");
  }
}

}  // namespace

GlobalConfig parse_config_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  GlobalConfig cfg;
  if (root.is_null()) return cfg;
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [section, body] : root.items()) {
    if (section == "compare") {
      for (const auto& [key, value] : body.items()) {
        const std::string path = "compare." + key;
        if (key == "w_block") cfg.compare.block = number_at(value, path);
        else if (key == "w_conn") cfg.compare.connection = number_at(value, path);
        else if (key == "w_param") cfg.compare.param = number_at(value, path);
        else throw ConfigError("unknown config key '" + path + "'");
      }
    } else if (section == "reward") {
      for (const auto& [kind, weights] : body.items()) {
        if (kind == "qa") apply_weights(cfg.reward_qa.weights, weights, "reward.qa");
        else if (kind == "create")
          apply_weights(cfg.reward_create.weights, weights, "reward.create");
        else if (kind == "modify")
          apply_weights(cfg.reward_modify.weights, weights, "reward.modify");
        else if (kind == "reconstruct")
          apply_weights(cfg.reward_reconstruct.weights, weights, "reward.reconstruct");
        else throw ConfigError("unknown config key 'reward." + kind + "'");
      }
    } else if (section == "regrpo") {
      apply_regrpo(cfg.regrpo, body);
    } else if (section == "schedule") {
      apply_schedule(cfg.regrpo.schedule, body);
    } else if (section == "simlab") {
      apply_simlab(cfg.comparison, body);
    } else {
      throw ConfigError("unknown config key '" + section + "'");
    }
  }
  cfg.comparison.regrpo = cfg.regrpo;
  return cfg;
}

GlobalConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace blockflow
