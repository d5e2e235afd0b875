#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blockflow/model.hpp"

namespace blockflow {

enum class PortDomain {
  SignalIn,
  SignalOut,
  Thermal,
  Electrical,
  Mechanical,
  Hydraulic,
  Magnetic,
};

bool is_conserving_domain(PortDomain d);
std::string_view domain_name(PortDomain d);
std::optional<PortDomain> domain_from_name(std::string_view name);

struct PortSpec {
  PortId id;
  PortDomain domain = PortDomain::SignalIn;
  bool required = false;
  std::string alias;  // optional named form, e.g. "-" or "T_meas"
};

struct ParamSpec {
  enum class Kind { Number, String, Bool, Enum };
  std::string name;
  Kind kind = Kind::Number;
  std::optional<double> min;
  std::optional<double> max;
  std::vector<std::string> enum_values;
  bool required = false;
  std::optional<ParamValue> default_value;
};

struct BlockDef {
  std::string type_name;
  std::string library_path;  // emission source path, e.g. "fl_lib/Thermal/..."
  std::string library;       // human-readable library label
  std::string description;
  std::vector<std::string> aliases;
  std::vector<PortSpec> ports;
  std::vector<ParamSpec> params;
  // Bridge blocks accept a conserving connection from any physical domain
  // (converters, solver configuration).
  bool bridge = false;

  const PortSpec* find_port(const PortId& id) const;
  const PortSpec* find_port_directed(const PortId& id, bool as_source) const;
  const ParamSpec* find_param(std::string_view name) const;
  bool has_conserving_ports() const;
};

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<BlockDef> defs);

  const std::vector<BlockDef>& defs() const { return defs_; }
  bool empty() const { return defs_.empty(); }
  const BlockDef* find(std::string_view type_name) const;

  // Exact-match lookup. Throws NotFoundError carrying up to 3 nearest
  // type names by edit distance; fuzziness belongs to search_blocks.
  const BlockDef& resolve_type(std::string_view type_name) const;

  // Per-query ranked lexical search over type names (weighted 3x), aliases
  // and descriptions. `lib` filters by library_path prefix; ties break by
  // type name. Empty result lists are valid.
  std::vector<std::vector<const BlockDef*>> search_blocks(
      std::span<const std::string> queries, std::string_view lib = {}, size_t top_k = 3) const;

 private:
  std::vector<BlockDef> defs_;
  std::map<std::string, size_t, std::less<>> by_name_;
  // token -> def indices, for search
  std::map<std::string, std::vector<size_t>> index_;
};

// Resolves named aliases through the block's alias table; indexed ports
// match directly. Throws NotFoundError listing the valid ports.
const PortSpec& resolve_port(const BlockDef& def, const PortId& port);

// Catalog file: {"version": 1, "blocks": [...]}; duplicate type names are a
// LoadError.
Catalog load_catalog(const std::string& path);
Catalog load_catalog_text(std::string_view text);

}  // namespace blockflow
