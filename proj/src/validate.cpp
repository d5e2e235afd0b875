#include "blockflow/validate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "blockflow/util.hpp"

namespace blockflow {

Severity severity_for_code(std::string_view code) {
  return code.starts_with("W") ? Severity::Warning : Severity::Error;
}

std::optional<std::string> nearest_name(std::string_view needle,
                                        std::span<const std::string> candidates) {
  const size_t limit =
      std::max<size_t>(2, (needle.size() + 3) / 4);  // ceil(|needle|/4)
  std::optional<std::string> best;
  size_t best_dist = limit + 1;
  for (const auto& c : candidates) {
    const size_t d = levenshtein(needle, c);
    if (d < best_dist || (d == best_dist && best && c < *best)) {
      best = c;
      best_dist = d;
    }
  }
  if (best_dist > limit) return std::nullopt;
  return best;
}

namespace {

class ModelChecker {
 public:
  ModelChecker(const SystemModel& model, const Catalog& catalog, std::string prefix,
               std::vector<Diagnostic>& out)
      : model_(model), catalog_(catalog), prefix_(std::move(prefix)), out_(out) {}

  void run() {
    check_blocks();
    check_connections();
    check_unconnected_ports();
  }

 private:
  void emit(std::string code, std::string subject, std::string message,
            std::string suggestion = {}) {
    out_.push_back({code, severity_for_code(code), prefix_ + subject, std::move(message),
                    std::move(suggestion)});
  }

  std::vector<std::string> block_names() const {
    std::vector<std::string> names;
    names.reserve(model_.blocks.size());
    for (const auto& [name, _] : model_.blocks) names.push_back(name);
    return names;
  }

  const BlockDef* def_for(const BlockInstance& inst) const {
    if (inst.is_subsystem()) return nullptr;
    return catalog_.find(inst.type_name);
  }

  void check_blocks() {
    for (const auto& [name, inst] : model_.blocks) {
      if (inst.is_subsystem()) {
        if (inst.inner) {
          ModelChecker sub(*inst.inner, catalog_, prefix_ + name + "/", out_);
          sub.check_blocks();
          sub.check_connections();
          sub.check_unconnected_ports();
        }
        continue;
      }
      const BlockDef* def = catalog_.find(inst.type_name);
      if (def == nullptr) {
        std::string suggestion;
        try {
          catalog_.resolve_type(inst.type_name);
        } catch (const NotFoundError& e) {
          if (!e.suggestions.empty()) suggestion = e.suggestions.front();
        }
        emit("E001", name, "unknown block type '" + inst.type_name + "'", suggestion);
        continue;
      }
      check_params(name, inst, *def);
    }
  }

  void check_params(const std::string& name, const BlockInstance& inst, const BlockDef& def) {
    for (const auto& spec : def.params) {
      if (spec.required && inst.find_param(spec.name) == nullptr)
        emit("E004", name + "." + spec.name,
             "missing required parameter '" + spec.name + "'");
    }
    std::vector<std::string> known;
    known.reserve(def.params.size());
    for (const auto& spec : def.params) known.push_back(spec.name);
    for (const auto& [pname, pvalue] : inst.params) {
      const ParamSpec* spec = def.find_param(pname);
      if (spec == nullptr) {
        auto hint = nearest_name(pname, known);
        emit("W002", name + "." + pname, "unknown parameter '" + pname + "'",
             hint.value_or(""));
        continue;
      }
      check_param_value(name, pname, pvalue, *spec);
    }
  }

  void check_param_value(const std::string& block, const std::string& pname,
                         const ParamValue& value, const ParamSpec& spec) {
    const std::string subject = block + "." + pname;
    switch (spec.kind) {
      case ParamSpec::Kind::Number: {
        std::optional<double> num;
        if (value.kind == ParamValue::Kind::Number) num = value.number;
        else if (value.kind == ParamValue::Kind::String) num = parse_double(value.str);
        if (!num) {
          emit("E005", subject, "parameter '" + pname + "' must be numeric");
          return;
        }
        if (!std::isfinite(*num)) {
          emit("E005", subject, "parameter '" + pname + "' must be finite");
          return;
        }
        if (spec.min && *num < *spec.min)
          emit("E005", subject,
               "parameter '" + pname + "' below minimum " + format_double(*spec.min));
        if (spec.max && *num > *spec.max)
          emit("E005", subject,
               "parameter '" + pname + "' above maximum " + format_double(*spec.max));
        break;
      }
      case ParamSpec::Kind::Enum: {
        if (value.kind != ParamValue::Kind::String ||
            std::find(spec.enum_values.begin(), spec.enum_values.end(), value.str) ==
                spec.enum_values.end()) {
          std::string valid;
          for (const auto& v : spec.enum_values) {
            if (!valid.empty()) valid += ", ";
            valid += v;
          }
          auto hint = value.kind == ParamValue::Kind::String
                          ? nearest_name(value.str, spec.enum_values)
                          : std::nullopt;
          emit("E005", subject, "parameter '" + pname + "' must be one of: " + valid,
               hint.value_or(""));
        }
        break;
      }
      case ParamSpec::Kind::Bool:
        if (value.kind != ParamValue::Kind::Bool)
          emit("E005", subject, "parameter '" + pname + "' must be a boolean");
        break;
      case ParamSpec::Kind::String:
        if (value.kind != ParamValue::Kind::String)
          emit("E005", subject, "parameter '" + pname + "' must be a string");
        break;
    }
  }

  struct ResolvedEndpoint {
    const BlockInstance* inst = nullptr;
    const BlockDef* def = nullptr;
    const PortSpec* port = nullptr;
    bool known_block = false;
  };

  ResolvedEndpoint resolve_endpoint(const PortRef& ref, const std::string& subject,
                                    bool as_source, const std::vector<std::string>& names) {
    ResolvedEndpoint res;
    res.inst = model_.find_block(ref.block);
    if (res.inst == nullptr) {
      auto hint = nearest_name(ref.block, names);
      emit("E007", subject, "connection references unknown block '" + ref.block + "'",
           hint.value_or(""));
      return res;
    }
    res.known_block = true;
    if (res.inst->is_subsystem()) return res;  // subsystem ports are structural
    res.def = def_for(*res.inst);
    if (res.def == nullptr) return res;  // E001 already reported
    if (ref.port.kind == PortKind::Alias) {
      for (const auto& p : res.def->ports)
        if (p.alias == ref.port.alias) {
          res.port = &p;
          return res;
        }
    } else {
      res.port = res.def->find_port_directed(ref.port, as_source);
      if (res.port != nullptr) return res;
    }
    std::vector<std::string> valid;
    for (const auto& p : res.def->ports) {
      valid.push_back(render_port_id(p.id));
      if (!p.alias.empty()) valid.push_back(p.alias);
    }
    auto hint = nearest_name(render_port_id(ref.port), valid);
    emit("E002", subject,
         "block '" + ref.block + "' (" + res.inst->type_name + ") has no port '" +
             render_port_id(ref.port) + "'",
         hint.value_or(""));
    return res;
  }

  void check_connections() {
    const auto names = block_names();
    std::map<std::pair<std::string, PortId>, int> signal_fanin;
    for (size_t i = 0; i < model_.connections.size(); ++i) {
      const auto& conn = model_.connections[i];
      const std::string subject = "connections[" + std::to_string(i) + "]";
      if (!conn.is_single()) {
        emit("E002", subject,
             "multi-port connection arity mismatch: " + render_endpoint(conn.src) + " -> " +
                 render_endpoint(conn.dst));
        continue;
      }
      const PortRef src = conn.src.ref();
      const PortRef dst = conn.dst.ref();
      auto rs = resolve_endpoint(src, subject, /*as_source=*/true, names);
      auto rd = resolve_endpoint(dst, subject, /*as_source=*/false, names);
      if (rs.port != nullptr && rd.port != nullptr)
        check_domains(subject, src, *rs, dst, *rd);
      if (rd.port != nullptr && rd.port->domain == PortDomain::SignalIn)
        signal_fanin[{dst.block, rd.port->id}]++;
    }
    for (const auto& [key, count] : signal_fanin) {
      if (count > 1)
        emit("E009", key.first + "/" + render_port_id(key.second),
             "signal input '" + key.first + "/" + render_port_id(key.second) + "' is driven " +
                 std::to_string(count) + " times");
    }
    // The physical network crosses subsystem boundaries; one solver block
    // anywhere suffices, so this check runs on the root only.
    if (prefix_.empty()) check_solver_configuration();
  }

  void check_domains(const std::string& subject, const PortRef& src, const ResolvedEndpoint& rs,
                     const PortRef& dst, const ResolvedEndpoint& rd) {
    const PortDomain a = rs.port->domain;
    const PortDomain b = rd.port->domain;
    const bool a_cons = is_conserving_domain(a);
    const bool b_cons = is_conserving_domain(b);
    if (a_cons && b_cons) {
      if (a != b && !rs.def->bridge && !rd.def->bridge)
        emit("E003", subject,
             "domain mismatch: " + render_port_ref(src) + " is " + std::string(domain_name(a)) +
                 ", " + render_port_ref(dst) + " is " + std::string(domain_name(b)));
      return;
    }
    if (!a_cons && !b_cons) {
      if (!(a == PortDomain::SignalOut && b == PortDomain::SignalIn))
        emit("E003", subject,
             "signal connection must run output to input: " + render_port_ref(src) + " -> " +
                 render_port_ref(dst));
      return;
    }
    // Conserving to signal only through a bridge block.
    if (!(rs.def->bridge || rd.def->bridge))
      emit("E003", subject,
           "cannot connect " + std::string(domain_name(a)) + " port " + render_port_ref(src) +
               " to " + std::string(domain_name(b)) + " port " + render_port_ref(dst));
  }

  void check_solver_configuration() {
    bool has_physical = false;
    bool has_solver = false;
    scan_physical(model_, has_physical, has_solver);
    if (has_physical && !has_solver)
      emit("E006", "model",
           "physical network has no Solver Configuration block",
           "add a Solver Configuration block");
  }

  void scan_physical(const SystemModel& m, bool& has_physical, bool& has_solver) const {
    for (const auto& [name, inst] : m.blocks) {
      if (inst.inner) {
        scan_physical(*inst.inner, has_physical, has_solver);
        continue;
      }
      if (inst.type_name == "Solver Configuration") has_solver = true;
      if (const BlockDef* def = catalog_.find(inst.type_name);
          def != nullptr && def->has_conserving_ports() && !def->bridge)
        has_physical = true;
    }
  }

  void check_unconnected_ports() {
    std::set<std::pair<std::string, PortId>> touched;
    for (const auto& conn : model_.connections) {
      for (const auto* ep : {&conn.src, &conn.dst}) {
        for (const auto& port : ep->ports) {
          PortId resolved = port;
          if (port.kind == PortKind::Alias) {
            if (const auto* inst = model_.find_block(ep->block)) {
              if (const BlockDef* def = def_for(*inst)) {
                for (const auto& p : def->ports)
                  if (p.alias == port.alias) resolved = p.id;
              }
            }
          }
          touched.insert({ep->block, resolved});
        }
      }
    }
    for (const auto& [name, inst] : model_.blocks) {
      const BlockDef* def = def_for(inst);
      if (def == nullptr) continue;
      for (const auto& p : def->ports) {
        if (p.required && !touched.count({name, p.id}))
          emit("W001", name + "/" + render_port_id(p.id),
               "required port '" + name + "/" + render_port_id(p.id) + "' is unconnected");
      }
    }
  }

  const SystemModel& model_;
  const Catalog& catalog_;
  std::string prefix_;
  std::vector<Diagnostic>& out_;
};

}  // namespace

std::vector<Diagnostic> validate(const SystemModel& model, const Catalog& catalog) {
  const SystemModel canon = canonicalize(model);
  std::vector<Diagnostic> out;
  ModelChecker(canon, catalog, "", out).run();
  std::sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
    if (a.severity != b.severity) return a.severity < b.severity;
    if (a.code != b.code) return a.code < b.code;
    if (a.subject != b.subject) return a.subject < b.subject;
    return a.message < b.message;
  });
  return out;
}

bool is_executable(const SystemModel& model, const Catalog& catalog) {
  const auto diags = validate(model, catalog);
  return std::none_of(diags.begin(), diags.end(),
                      [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

}  // namespace blockflow
