#include "blockflow/compare.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "blockflow/util.hpp"

namespace blockflow {

namespace {

struct Indexed {
  std::vector<std::string> names;
  std::vector<const BlockInstance*> blocks;
  std::map<std::string, size_t> index;
  std::vector<Connection> conns;  // canonical, single-port

  explicit Indexed(const SystemModel& canonical) {
    names.reserve(canonical.blocks.size());
    for (const auto& [name, inst] : canonical.blocks) {
      index[name] = names.size();
      names.push_back(name);
      blocks.push_back(&inst);
    }
    for (const auto& c : canonical.connections)
      if (c.is_single()) conns.push_back(c);
  }
};

// mapping[i] = ref index of cand block i, or -1.
struct Scorer {
  const Indexed& cand;
  const Indexed& ref;
  CompareWeights w;
  size_t ref_param_total = 0;

  Scorer(const Indexed& c, const Indexed& r, CompareWeights weights)
      : cand(c), ref(r), w(weights) {
    for (const auto* b : ref.blocks) ref_param_total += b->params.size();
  }

  static bool conserving_pair(const Connection& c) {
    return c.src.ports[0].conserving() && c.dst.ports[0].conserving();
  }

  SimilarityReport score(const std::vector<int>& mapping) const {
    SimilarityReport rep;
    size_t mapped = 0;
    for (int m : mapping)
      if (m >= 0) ++mapped;

    const size_t nc = cand.blocks.size();
    const size_t nr = ref.blocks.size();
    rep.block_f1 = (nc + nr) == 0 ? 1.0
                                  : 2.0 * static_cast<double>(mapped) /
                                        static_cast<double>(nc + nr);

    // Connections under the mapping. Each reference connection can be
    // consumed once; conserving-to-conserving matches either orientation.
    std::vector<bool> used(ref.conns.size(), false);
    size_t conn_matched = 0;
    for (const auto& c : cand.conns) {
      auto si = cand.index.find(c.src.block);
      auto di = cand.index.find(c.dst.block);
      if (si == cand.index.end() || di == cand.index.end()) continue;
      const int ms = mapping[si->second];
      const int md = mapping[di->second];
      if (ms < 0 || md < 0) continue;
      const std::string& rs = ref.names[static_cast<size_t>(ms)];
      const std::string& rd = ref.names[static_cast<size_t>(md)];
      for (size_t j = 0; j < ref.conns.size(); ++j) {
        if (used[j]) continue;
        const auto& rc = ref.conns[j];
        const bool direct = rc.src.block == rs && rc.src.ports[0] == c.src.ports[0] &&
                            rc.dst.block == rd && rc.dst.ports[0] == c.dst.ports[0];
        bool swapped = false;
        if (!direct && conserving_pair(c) && conserving_pair(rc)) {
          swapped = rc.src.block == rd && rc.src.ports[0] == c.dst.ports[0] &&
                    rc.dst.block == rs && rc.dst.ports[0] == c.src.ports[0];
        }
        if (direct || swapped) {
          used[j] = true;
          ++conn_matched;
          break;
        }
      }
    }
    const size_t conn_total = cand.conns.size() + ref.conns.size();
    rep.connection_f1 = conn_total == 0 ? 1.0
                                        : 2.0 * static_cast<double>(conn_matched) /
                                              static_cast<double>(conn_total);

    // Parameters present in the reference, across all reference blocks;
    // unmapped reference blocks count as misses, extra candidate
    // parameters are ignored.
    if (cand.blocks.empty() && !ref.blocks.empty()) {
      rep.param_match = 0.0;
    } else if (ref_param_total == 0) {
      rep.param_match = 1.0;
    } else {
      std::vector<int> reverse(ref.blocks.size(), -1);
      for (size_t i = 0; i < mapping.size(); ++i)
        if (mapping[i] >= 0) reverse[static_cast<size_t>(mapping[i])] = static_cast<int>(i);
      size_t matched = 0;
      for (size_t r = 0; r < ref.blocks.size(); ++r) {
        if (reverse[r] < 0) continue;
        const auto* cb = cand.blocks[static_cast<size_t>(reverse[r])];
        for (const auto& [k, v] : ref.blocks[r]->params) {
          const ParamValue* cv = cb->find_param(k);
          if (cv != nullptr && *cv == v) ++matched;
        }
      }
      rep.param_match = static_cast<double>(matched) / static_cast<double>(ref_param_total);
    }

    // Normalized by the weight sum so total stays in [0, 1] for any
    // non-degenerate weight choice.
    const double wsum = w.block + w.connection + w.param;
    rep.total = wsum <= 0 ? 0.0
                          : (w.block * rep.block_f1 + w.connection * rep.connection_f1 +
                             w.param * rep.param_match) /
                                wsum;
    for (size_t i = 0; i < mapping.size(); ++i) {
      if (mapping[i] >= 0)
        rep.mapping.pairs.emplace_back(cand.names[i],
                                       ref.names[static_cast<size_t>(mapping[i])]);
    }
    return rep;
  }
};

void bruteforce_rec(const Indexed& cand, const Indexed& ref, const Scorer& scorer, size_t i,
                    std::vector<int>& mapping, std::vector<bool>& used,
                    SimilarityReport& best) {
  if (i == cand.blocks.size()) {
    SimilarityReport rep = scorer.score(mapping);
    if (rep.total > best.total) best = std::move(rep);
    return;
  }
  for (size_t r = 0; r < ref.blocks.size(); ++r) {
    if (used[r]) continue;
    if (ref.blocks[r]->type_name != cand.blocks[i]->type_name) continue;
    used[r] = true;
    mapping[i] = static_cast<int>(r);
    bruteforce_rec(cand, ref, scorer, i + 1, mapping, used, best);
    used[r] = false;
  }
  mapping[i] = -1;
  bruteforce_rec(cand, ref, scorer, i + 1, mapping, used, best);
}

}  // namespace

SimilarityReport optimal_mapping_bruteforce(const SystemModel& cand_in, const SystemModel& ref_in,
                                            CompareWeights weights, size_t max_blocks) {
  const SystemModel cand_c = canonicalize(cand_in);
  const SystemModel ref_c = canonicalize(ref_in);
  if (cand_c.blocks.size() > max_blocks || ref_c.blocks.size() > max_blocks)
    throw SizeExceeded("brute-force comparison limited to " + std::to_string(max_blocks) +
                       " blocks");
  Indexed cand(cand_c), ref(ref_c);
  Scorer scorer(cand, ref, weights);
  std::vector<int> mapping(cand.blocks.size(), -1);
  std::vector<bool> used(ref.blocks.size(), false);
  SimilarityReport best = scorer.score(mapping);  // empty mapping baseline
  bruteforce_rec(cand, ref, scorer, 0, mapping, used, best);
  return best;
}

SimilarityReport greedy_mapping(const SystemModel& cand_in, const SystemModel& ref_in,
                                CompareWeights weights) {
  const SystemModel cand_c = canonicalize(cand_in);
  const SystemModel ref_c = canonicalize(ref_in);
  Indexed cand(cand_c), ref(ref_c);
  Scorer scorer(cand, ref, weights);

  // Neighborhood signature: rendered (port, peer type, peer port) facts.
  auto signature = [](const Indexed& m, size_t b) {
    std::vector<std::string> sig;
    const std::string& name = m.names[b];
    for (const auto& c : m.conns) {
      if (c.src.block == name) {
        auto peer = m.index.find(c.dst.block);
        const std::string peer_type =
            peer == m.index.end() ? std::string("?") : m.blocks[peer->second]->type_name;
        sig.push_back("s:" + render_port_id(c.src.ports[0]) + ">" + peer_type + "/" +
                      render_port_id(c.dst.ports[0]));
      }
      if (c.dst.block == name) {
        auto peer = m.index.find(c.src.block);
        const std::string peer_type =
            peer == m.index.end() ? std::string("?") : m.blocks[peer->second]->type_name;
        sig.push_back("d:" + render_port_id(c.dst.ports[0]) + "<" + peer_type + "/" +
                      render_port_id(c.src.ports[0]));
      }
    }
    std::sort(sig.begin(), sig.end());
    return sig;
  };
  std::vector<std::vector<std::string>> cand_sig(cand.blocks.size());
  std::vector<std::vector<std::string>> ref_sig(ref.blocks.size());
  for (size_t i = 0; i < cand.blocks.size(); ++i) cand_sig[i] = signature(cand, i);
  for (size_t r = 0; r < ref.blocks.size(); ++r) ref_sig[r] = signature(ref, r);

  auto overlap = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] == b[j]) {
        ++n;
        ++i;
        ++j;
      } else if (a[i] < b[j]) {
        ++i;
      } else {
        ++j;
      }
    }
    return n;
  };

  // All type-compatible pairs ranked by signature overlap.
  struct Pair {
    size_t overlap;
    size_t c, r;
  };
  std::vector<Pair> pairs;
  for (size_t i = 0; i < cand.blocks.size(); ++i)
    for (size_t r = 0; r < ref.blocks.size(); ++r)
      if (cand.blocks[i]->type_name == ref.blocks[r]->type_name)
        pairs.push_back({overlap(cand_sig[i], ref_sig[r]), i, r});
  std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    if (cand.names[a.c] != cand.names[b.c]) return cand.names[a.c] < cand.names[b.c];
    return ref.names[a.r] < ref.names[b.r];
  });

  std::vector<int> mapping(cand.blocks.size(), -1);
  std::vector<bool> used(ref.blocks.size(), false);
  for (const auto& p : pairs) {
    if (mapping[p.c] >= 0 || used[p.r]) continue;
    mapping[p.c] = static_cast<int>(p.r);
    used[p.r] = true;
  }

  // Bounded local improvement: re-assignments and pair swaps within type.
  SimilarityReport best = scorer.score(mapping);
  for (int round = 0; round < 3; ++round) {
    bool improved = false;
    for (size_t i = 0; i < mapping.size(); ++i) {
      for (size_t r = 0; r < ref.blocks.size(); ++r) {
        if (cand.blocks[i]->type_name != ref.blocks[r]->type_name) continue;
        const int prev = mapping[i];
        if (prev == static_cast<int>(r)) continue;
        if (used[r]) {
          // Swap images with whoever holds r.
          size_t other = mapping.size();
          for (size_t k = 0; k < mapping.size(); ++k)
            if (mapping[k] == static_cast<int>(r)) other = k;
          if (other == mapping.size()) continue;
          if (prev >= 0 &&
              cand.blocks[other]->type_name != ref.blocks[static_cast<size_t>(prev)]->type_name)
            continue;
          mapping[i] = static_cast<int>(r);
          mapping[other] = prev;
          SimilarityReport rep = scorer.score(mapping);
          if (rep.total > best.total) {
            best = std::move(rep);
            improved = true;
          } else {
            mapping[other] = static_cast<int>(r);
            mapping[i] = prev;
          }
        } else {
          mapping[i] = static_cast<int>(r);
          if (prev >= 0) used[static_cast<size_t>(prev)] = false;
          used[r] = true;
          SimilarityReport rep = scorer.score(mapping);
          if (rep.total > best.total) {
            best = std::move(rep);
            improved = true;
          } else {
            used[r] = false;
            if (prev >= 0) used[static_cast<size_t>(prev)] = true;
            mapping[i] = prev;
          }
        }
      }
    }
    if (!improved) break;
  }
  return best;
}

SimilarityReport best_mapping(const SystemModel& cand, const SystemModel& ref,
                              CompareWeights weights) {
  if (cand.blocks.size() <= 8 && ref.blocks.size() <= 8)
    return optimal_mapping_bruteforce(cand, ref, weights);
  return greedy_mapping(cand, ref, weights);
}

double completeness(const SystemModel& cand, const SystemModel& ref) {
  const size_t nr = canonicalize(ref).blocks.size();
  if (nr == 0) return 1.0;
  const auto rep = best_mapping(cand, ref);
  return static_cast<double>(rep.mapping.pairs.size()) / static_cast<double>(nr);
}

namespace {

std::string default_summary(const SystemModel& inner) {
  std::vector<std::string> types;
  for (const auto& [name, inst] : inner.blocks) types.push_back(inst.type_name);
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());
  std::string out = std::to_string(inner.blocks.size()) + " blocks: ";
  for (size_t i = 0; i < types.size(); ++i) {
    if (i) out += ", ";
    out += types[i];
  }
  return out;
}

std::string fresh_name(const SystemModel& model, int ordinal) {
  std::string base = "Subsystem " + std::to_string(ordinal);
  std::string name = base;
  int n = 1;
  while (model.has_block(name)) name = base + "." + std::to_string(n++);
  return name;
}

}  // namespace

SystemModel encapsulate(const SystemModel& model_in, const std::set<std::string>& keep,
                        const Summarizer& summarizer) {
  const SystemModel model = canonicalize(model_in);
  for (const auto& k : keep)
    if (!model.has_block(k)) throw Error("encapsulate: unknown block '" + k + "'");

  // Union-find over non-kept blocks through single-port connections.
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    return it->second = find(it->second);
  };
  for (const auto& [name, inst] : model.blocks)
    if (!keep.count(name)) parent[name] = name;
  for (const auto& conn : model.connections) {
    if (!conn.is_single()) continue;
    const std::string& a = conn.src.block;
    const std::string& b = conn.dst.block;
    if (keep.count(a) || keep.count(b)) continue;
    if (!parent.count(a) || !parent.count(b)) continue;
    parent[find(a)] = find(b);
  }

  // Components in canonical discovery order.
  std::vector<std::string> roots;
  std::map<std::string, size_t> component_of;
  for (const auto& [name, inst] : model.blocks) {
    if (keep.count(name)) continue;
    const std::string root = find(name);
    size_t idx;
    auto it = std::find(roots.begin(), roots.end(), root);
    if (it == roots.end()) {
      idx = roots.size();
      roots.push_back(root);
    } else {
      idx = static_cast<size_t>(it - roots.begin());
    }
    component_of[name] = idx;
  }
  if (roots.empty()) return model;

  struct Component {
    std::string sub_name;
    SystemModel inner;
    std::vector<std::pair<PortId, PortRef>> bindings;
    int next_conn = 1;
    int next_signal = 1;
  };
  std::vector<Component> comps(roots.size());
  SystemModel out;
  for (size_t i = 0; i < comps.size(); ++i)
    comps[i].sub_name = fresh_name(model, static_cast<int>(i + 1));

  for (const auto& [name, inst] : model.blocks) {
    if (keep.count(name)) continue;
    comps[component_of[name]].inner.add_block(name, inst);
  }
  for (const auto& [name, inst] : model.blocks)
    if (keep.count(name)) out.add_block(name, inst);

  // Fresh subsystem port for an inner endpoint; reused if already bound.
  auto boundary_port = [](Component& comp, const PortRef& inner_ref) {
    for (const auto& [port, ref] : comp.bindings)
      if (ref == inner_ref) return port;
    PortId port = inner_ref.port.kind == PortKind::Signal
                      ? PortId::signal(comp.next_signal++)
                      : PortId::conserving_left(comp.next_conn++);
    comp.bindings.emplace_back(port, inner_ref);
    return port;
  };

  for (const auto& conn : model.connections) {
    if (!conn.is_single()) {
      out.connections.push_back(conn);
      continue;
    }
    const PortRef src = conn.src.ref();
    const PortRef dst = conn.dst.ref();
    const bool src_in = component_of.count(src.block) != 0;
    const bool dst_in = component_of.count(dst.block) != 0;
    if (src_in && dst_in && component_of[src.block] == component_of[dst.block]) {
      comps[component_of[src.block]].inner.connections.push_back(conn);
      continue;
    }
    PortRef new_src = src;
    PortRef new_dst = dst;
    if (src_in) {
      Component& comp = comps[component_of[src.block]];
      new_src = {comp.sub_name, boundary_port(comp, src)};
    }
    if (dst_in) {
      Component& comp = comps[component_of[dst.block]];
      new_dst = {comp.sub_name, boundary_port(comp, dst)};
    }
    out.connections.push_back({Endpoint::single(new_src), Endpoint::single(new_dst)});
  }

  for (auto& comp : comps) {
    BlockInstance sub;
    sub.type_name = "Subsystem";
    sub.summary = summarizer ? summarizer(comp.inner) : default_summary(comp.inner);
    sub.port_bindings = std::move(comp.bindings);
    sub.inner = std::make_shared<SystemModel>(canonicalize(comp.inner));
    out.add_block(comp.sub_name, std::move(sub));
  }
  return canonicalize(out);
}

SystemModel flatten(const SystemModel& model_in) {
  const SystemModel model = canonicalize(model_in);
  bool any_subsystem = false;
  for (const auto& [name, inst] : model.blocks)
    if (inst.is_subsystem()) any_subsystem = true;
  if (!any_subsystem) return model;

  SystemModel out;
  std::map<std::string, const BlockInstance*> subsystems;
  auto add_checked = [&](const std::string& name, const BlockInstance& inst) {
    if (out.has_block(name)) throw FlattenError("flatten: name collision on '" + name + "'");
    out.add_block(name, inst);
  };
  for (const auto& [name, inst] : model.blocks) {
    if (!inst.is_subsystem()) {
      add_checked(name, inst);
      continue;
    }
    if (!inst.inner)
      throw FlattenError("subsystem '" + name + "' has no inner model");
    subsystems[name] = &inst;
    const SystemModel inner = flatten(*inst.inner);
    for (const auto& [iname, iinst] : inner.blocks) add_checked(iname, iinst);
    out.connections.insert(out.connections.end(), inner.connections.begin(),
                           inner.connections.end());
  }

  auto rebind = [&](const PortRef& ref) -> PortRef {
    auto it = subsystems.find(ref.block);
    if (it == subsystems.end()) return ref;
    for (const auto& [port, target] : it->second->port_bindings)
      if (port == ref.port) return target;
    throw FlattenError("dangling boundary port '" + render_port_ref(ref) + "'");
  };

  for (const auto& conn : model.connections) {
    if (!conn.is_single()) {
      out.connections.push_back(conn);
      continue;
    }
    out.connections.push_back({Endpoint::single(rebind(conn.src.ref())),
                               Endpoint::single(rebind(conn.dst.ref()))});
  }
  return canonicalize(out);
}

}  // namespace blockflow
