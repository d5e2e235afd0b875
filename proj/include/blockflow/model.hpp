#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockflow/errors.hpp"

namespace blockflow {

// A port on a block. Signal ports are the numbered Simulink in/out ports;
// conserving ports are the bidirectional physical LConnN/RConnN terminals;
// Alias covers named terminals like "-", "+" or "T_meas" that the catalog
// resolves to a concrete port.
enum class PortKind { Signal, ConservingLeft, ConservingRight, Alias };

struct PortId {
  PortKind kind = PortKind::Signal;
  int index = 0;        // >= 1 for indexed kinds
  std::string alias;    // non-empty for Alias

  static PortId signal(int n) { return {PortKind::Signal, n, {}}; }
  static PortId conserving_left(int n) { return {PortKind::ConservingLeft, n, {}}; }
  static PortId conserving_right(int n) { return {PortKind::ConservingRight, n, {}}; }
  static PortId named(std::string a) { return {PortKind::Alias, 0, std::move(a)}; }

  bool conserving() const {
    return kind == PortKind::ConservingLeft || kind == PortKind::ConservingRight;
  }
  friend auto operator<=>(const PortId&, const PortId&) = default;
};

// "LConn1" / "RConn2" / "3" / anything else as alias. Zero or negative
// indices and empty tokens are rejected.
PortId parse_port_id(std::string_view token);
std::string render_port_id(const PortId& id);

struct PortRef {
  std::string block;
  PortId port;
  friend auto operator<=>(const PortRef&, const PortRef&) = default;
};

// One side of a connection. Canonical endpoints carry exactly one port;
// pre-canonical text may carry a multi-port list "(LConn1,LConn2,LConn3)".
struct Endpoint {
  std::string block;
  std::vector<PortId> ports;

  static Endpoint single(PortRef r) { return {std::move(r.block), {std::move(r.port)}}; }
  bool is_single() const { return ports.size() == 1; }
  PortRef ref() const { return {block, ports.at(0)}; }
  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

struct Connection {
  Endpoint src;
  Endpoint dst;
  bool is_single() const { return src.is_single() && dst.is_single(); }
  friend auto operator<=>(const Connection&, const Connection&) = default;
};

struct ParamValue {
  enum class Kind { Number, String, Bool, NumberList };
  Kind kind = Kind::Number;
  double number = 0;
  std::string unit;            // optional, Number only
  std::string str;
  bool boolean = false;
  std::vector<double> list;

  static ParamValue make_number(double v, std::string unit = {});
  static ParamValue make_string(std::string v);
  static ParamValue make_bool(bool v);
  static ParamValue make_list(std::vector<double> v);
  friend bool operator==(const ParamValue&, const ParamValue&) = default;
};

struct SystemModel;

struct BlockInstance {
  std::string type_name;
  // Ordered; canonical form sorts by name. Names unique per block.
  std::vector<std::pair<std::string, ParamValue>> params;
  // Subsystems: the collapsed component lives here, immutable once built.
  std::shared_ptr<const SystemModel> inner;
  std::string summary;
  // Subsystem boundary ports -> inner port refs, assigned by encapsulate.
  std::vector<std::pair<PortId, PortRef>> port_bindings;

  const ParamValue* find_param(std::string_view name) const;
  void set_param(const std::string& name, ParamValue v);
  bool is_subsystem() const { return inner != nullptr || type_name == "Subsystem"; }
};

bool operator==(const BlockInstance& a, const BlockInstance& b);

// The compact model representation: named block instances plus port-to-port
// connections. Block order is preserved as inserted; canonical form sorts
// blocks by name and connections by (src, dst) with duplicates removed.
struct SystemModel {
  std::vector<std::pair<std::string, BlockInstance>> blocks;
  std::vector<Connection> connections;

  const BlockInstance* find_block(std::string_view name) const;
  BlockInstance* find_block(std::string_view name);
  bool has_block(std::string_view name) const;
  // Throws Error on duplicate name.
  void add_block(std::string name, BlockInstance inst);
  // Insert or replace.
  void upsert_block(const std::string& name, BlockInstance inst);

  size_t block_count() const { return blocks.size(); }
};

bool operator==(const SystemModel& a, const SystemModel& b);

// "Block/Port". When `context` is given and the text holds more than one
// '/', the block name is matched greedily against the model's block names.
PortRef parse_port_ref(std::string_view text, const SystemModel* context = nullptr);
std::string render_port_ref(const PortRef& ref);

// Endpoint variant accepting the "(p1,p2,...)" multi-port shorthand.
Endpoint parse_endpoint(std::string_view text, const SystemModel* context = nullptr);
std::string render_endpoint(const Endpoint& ep);

// Pairs multi-port endpoints index-wise. Single-port connections pass
// through unchanged; mismatched list lengths (including single x k) are an
// ExpandError -- there is no broadcast.
std::vector<Connection> expand_connection(const Connection& conn);

// Multi-port shorthand expanded, blocks sorted by name, params sorted,
// connections sorted and deduplicated, subsystems canonicalized recursively.
// Never throws: connections that cannot be expanded are kept verbatim for
// the validator to report.
SystemModel canonicalize(const SystemModel& model);

bool canonical_equal(const SystemModel& a, const SystemModel& b);

// Union of blocks and connections in canonical form. Blocks present in both
// inputs must be identical; otherwise MergeConflict names the block.
SystemModel merge(const SystemModel& a, const SystemModel& b);

// Tokenizer-free size proxy: maximal word-character runs plus non-space
// punctuation characters.
size_t estimate_tokens(std::string_view text);

}  // namespace blockflow
