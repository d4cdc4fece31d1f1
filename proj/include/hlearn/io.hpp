#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hlearn/device.hpp"
#include "hlearn/errors.hpp"
#include "hlearn/gl.hpp"
#include "hlearn/hamiltonian.hpp"
#include "hlearn/learner.hpp"
#include "hlearn/shadows.hpp"

namespace hlearn {

using json = nlohmann::json;

/// Parses JSON text, rejecting repeated keys inside any object.
inline json parse_json_strict(const std::string& text, const std::string& origin = "input") {
  std::vector<std::set<std::string>> scopes;
  bool duplicate = false;
  std::string dup_key;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start: scopes.emplace_back(); break;
      case json::parse_event_t::object_end:
        if (!scopes.empty()) scopes.pop_back();
        break;
      case json::parse_event_t::key:
        if (!scopes.empty() && !scopes.back().insert(parsed.get<std::string>()).second) {
          duplicate = true;
          dup_key = parsed.get<std::string>();
        }
        break;
      default: break;
    }
    return true;
  };
  json doc;
  try {
    doc = json::parse(text, cb);
  } catch (const json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
  if (duplicate) throw ParseError(origin + ": duplicate key \"" + dup_key + "\"");
  return doc;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << text;
}

// ---- Hamiltonians: {"n": int, "terms": [{"pauli": "XZI", "coeff": float}, ...]}

inline json hamiltonian_to_json(const SparsePauliSum& h) {
  json terms = json::array();
  for (const auto& [p, c] : h) terms.push_back({{"pauli", p.str()}, {"coeff", c}});
  return {{"n", h.num_qubits()}, {"terms", terms}};
}

inline SparsePauliSum hamiltonian_from_json(const json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    SparsePauliSum h(n);
    std::set<PauliString> seen;
    for (const auto& t : doc.at("terms")) {
      const auto p = PauliString::parse(t.at("pauli").get<std::string>());
      if (p.num_qubits() != n) throw DimensionError("term " + p.str() + " does not have n letters");
      if (p.is_identity()) throw ParseError("identity term in Hamiltonian file");
      if (!seen.insert(p).second) throw ParseError("duplicate term " + p.str());
      const double c = t.at("coeff").get<double>();
      if (!std::isfinite(c)) throw ParseError("non-finite coefficient for " + p.str());
      h.set(p, c);
    }
    return h;
  } catch (const json::exception& e) {
    throw ParseError(std::string("Hamiltonian JSON: ") + e.what());
  }
}

inline void save_hamiltonian(const std::string& path, const SparsePauliSum& h) {
  write_text(path, hamiltonian_to_json(h).dump(2) + "\n");
}

inline SparsePauliSum load_hamiltonian(const std::string& path) {
  return hamiltonian_from_json(parse_json_strict(read_text(path), path));
}

// ---- Shot archives: one header line, then {"A","v","B","w","meta"} per shot.
// Sign vectors list ±1 in the same order as the letters (most significant qubit first).

inline json signs_to_json(Mask neg, int n) {
  json out = json::array();
  for (int q = n - 1; q >= 0; --q) out.push_back(((neg >> q) & 1U) ? -1 : 1);
  return out;
}

inline Mask signs_from_json(const json& arr, int n) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n) throw ParseError("sign vector length mismatch");
  Mask neg = 0;
  for (int i = 0; i < n; ++i) {
    const int v = arr[static_cast<std::size_t>(i)].get<int>();
    if (v != 1 && v != -1) throw ParseError("sign entries must be +1 or -1");
    if (v == -1) neg |= Mask{1} << (n - 1 - i);
  }
  return neg;
}

inline json shot_to_json(const ShotRecord& r, const json& meta) {
  const int n = r.prep.num_qubits();
  return {{"A", r.prep.basis.str()}, {"v", signs_to_json(r.prep.signs, n)}, {"B", r.basis.str()},
          {"w", signs_to_json(r.outcome, n)}, {"meta", meta}};
}

inline ShotRecord shot_from_json(const json& j) {
  const auto a = PauliString::parse(j.at("A").get<std::string>());
  const auto b = PauliString::parse(j.at("B").get<std::string>());
  const int n = a.num_qubits();
  if (b.num_qubits() != n) throw ParseError("shot record: A and B lengths differ");
  return {EigenPrep(a, signs_from_json(j.at("v"), n)), b, signs_from_json(j.at("w"), n)};
}

struct ShotArchive {
  json header;
  std::vector<ShotRecord> shots;
};

inline void write_shot_archive(const std::string& path, const json& header,
                               const std::vector<ShotRecord>& shots, const json& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << json{{"header", header}}.dump() << "\n";
  for (std::size_t i = 0; i < shots.size(); ++i) {
    json m = meta;
    m["index"] = i;
    out << shot_to_json(shots[i], m).dump() << "\n";
  }
}

inline ShotArchive read_shot_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  ShotArchive ar;
  std::string line;
  std::size_t lineno = 0;
  try {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = parse_json_strict(line, path + ":" + std::to_string(lineno));
      if (lineno == 1) {
        ar.header = j.at("header");
        continue;
      }
      ar.shots.push_back(shot_from_json(j));
    }
  } catch (const json::exception& e) {
    throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
  }
  if (lineno == 0) throw ParseError(path + ": empty archive");
  return ar;
}

inline json evolution_to_json(const Evolution& evo) {
  return {{"t", evo.t}, {"s", evo.s}, {"h0", hamiltonian_to_json(evo.h0)}};
}

inline void save_shadow_dataset(const std::string& path, const ShadowDataset& ds, const Evolution& evo) {
  const auto& p = ds.params();
  const json header{{"kind", "shadow"}, {"n", ds.num_qubits()}, {"k", p.k}, {"k_prime", p.k_prime},
                    {"eps", p.eps}, {"delta", p.delta}, {"scale", p.scale}, {"S", p.shots},
                    {"evolution", evolution_to_json(evo)}};
  write_shot_archive(path, header, ds.shots(), {{"t", evo.t}, {"s", evo.s}});
}

inline ShadowDataset load_shadow_dataset(const std::string& path) {
  auto ar = read_shot_archive(path);
  try {
    const auto& h = ar.header;
    if (h.at("kind") != "shadow") throw ParseError(path + ": not a shadow archive");
    ShadowParams p{h.at("k").get<int>(), h.at("k_prime").get<int>(), h.at("eps").get<double>(),
                   h.at("delta").get<double>(), h.at("scale").get<double>(), h.at("S").get<std::int64_t>()};
    if (static_cast<std::int64_t>(ar.shots.size()) != p.shots) throw ParseError(path + ": shot count differs from S");
    return ShadowDataset(h.at("n").get<int>(), p, ar.shots);
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

/// GL datasets: the shot archive at `path`, partitions and outer preps in `path`.partitions.json.
inline void save_gl_dataset(const std::string& path, const GLDataset& ds, const Evolution& evo) {
  const auto& p = ds.params();
  const json header{{"kind", "gl"}, {"n", ds.num_qubits()}, {"k_loc", p.k_loc}, {"gamma", p.gamma},
                    {"delta", p.delta}, {"p", p.p}, {"q", p.q}, {"evolution", evolution_to_json(evo)}};
  write_shot_archive(path, header, ds.shots(), {{"t", evo.t}, {"s", evo.s}});
  json outer = json::array();
  const int n = ds.num_qubits();
  for (const auto& o : ds.outer()) {
    std::string t, a;
    for (int q = n - 1; q >= 0; --q) {
      const bool in = (o.partition >> q) & 1U;
      t += in ? '1' : '0';
      a += in ? PauliString(n, o.ax, o.az).str()[static_cast<std::size_t>(n - 1 - q)] : 'I';
    }
    outer.push_back({{"T", t}, {"A_T", a}, {"v_T", signs_to_json(o.vneg, n)}});
  }
  write_text(path + ".partitions.json", json{{"partitions", outer}}.dump() + "\n");
}

inline GLDataset load_gl_dataset(const std::string& path) {
  auto ar = read_shot_archive(path);
  const json side = parse_json_strict(read_text(path + ".partitions.json"), path + ".partitions.json");
  try {
    const auto& h = ar.header;
    if (h.at("kind") != "gl") throw ParseError(path + ": not a GL archive");
    const int n = h.at("n").get<int>();
    std::vector<OuterPrep> outer;
    for (const auto& o : side.at("partitions")) {
      const auto t = o.at("T").get<std::string>();
      if (static_cast<int>(t.size()) != n) throw ParseError("partition length mismatch");
      OuterPrep op;
      for (int i = 0; i < n; ++i) {
        if (t[static_cast<std::size_t>(i)] == '1') op.partition |= Mask{1} << (n - 1 - i);
      }
      const auto a = PauliString::parse(o.at("A_T").get<std::string>());
      if (a.support_mask() != op.partition) throw ParseError("A_T support differs from T");
      op.ax = a.x_mask();
      op.az = a.z_mask();
      op.vneg = signs_from_json(o.at("v_T"), n) & op.partition;
      outer.push_back(op);
    }
    GLParams p{h.at("k_loc").get<int>(), h.at("gamma").get<double>(), h.at("delta").get<double>(),
               h.at("p").get<std::int64_t>(), h.at("q").get<std::int64_t>()};
    GLDataset ds(n, p, std::move(outer), ar.shots);
    if (ds.params().q != p.q) throw ParseError(path + ": q differs from the header");
    return ds;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// ---- Run reports

inline json ledger_to_json(const ResourceLedger& l) {
  return {{"total_evolution_time", l.total_evolution_time},
          {"min_applied_t", std::isfinite(l.min_applied_t) ? json(l.min_applied_t) : json(nullptr)},
          {"experiment_count", l.experiment_count}};
}

inline json run_report(const LearnResult& r, double eps, double delta, const std::string& mode) {
  json per = json::array();
  for (const auto& it : r.iterations) {
    per.push_back({{"j", it.j}, {"eta", it.eta}, {"s_j", it.s_j}, {"delta_j", it.delta_j},
                   {"query_eps", it.query_eps}, {"experiments", it.experiments},
                   {"tet_contribution", it.tet_contribution},
                   {"gl_queries", it.structure.gl_queries}, {"gl_passes", it.structure.gl_passes},
                   {"shadow_queries", it.structure.shadow_queries}, {"terms", it.estimate.size()}});
  }
  return {{"eps", eps}, {"delta", delta}, {"mode", mode}, {"t", r.t}, {"T", r.T},
          {"ledger", ledger_to_json(r.ledger)}, {"per_iteration", per},
          {"estimate", hamiltonian_to_json(r.estimate)}};
}

}  // namespace hlearn
