#include "cfbounds/model_io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cfbounds/errors.hpp"

namespace cfb {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw ParseError("expected a JSON object");
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
  return *it;
}

std::size_t size_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number_integer() || v.get<long long>() <= 0)
    throw ParseError(std::string("field '") + name + "' must be a positive integer");
  return v.get<std::size_t>();
}

// Flattens a nested numeric array of the given shape.
void flatten(const json& v, const std::string& name, const std::vector<std::size_t>& shape,
             std::size_t depth, std::vector<double>& out) {
  if (depth == shape.size()) {
    if (!v.is_number()) throw ParseError("field '" + name + "' has a non-numeric entry");
    out.push_back(v.get<double>());
    return;
  }
  if (!v.is_array())
    throw ParseError("field '" + name + "' must be a nested array of depth " +
                     std::to_string(shape.size()));
  if (v.size() != shape[depth])
    throw StructuralError("field '" + name + "' has length " + std::to_string(v.size()) +
                          " at depth " + std::to_string(depth + 1) + ", expected " +
                          std::to_string(shape[depth]));
  for (const auto& x : v) flatten(x, name, shape, depth + 1, out);
}

std::vector<int> int_array(const json& j, const char* name, int lo, int hi) {
  const json& v = field(j, name);
  if (!v.is_array()) throw ParseError(std::string("field '") + name + "' must be an array");
  std::vector<int> out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!v[k].is_number_integer())
      throw ParseError(std::string("field '") + name + "' entry " + std::to_string(k + 1) +
                       " is not an integer");
    const int x = v[k].get<int>();
    if (x < lo || x > hi)
      throw InputError(std::string("field '") + name + "' entry " + std::to_string(k + 1) +
                       " = " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
    out.push_back(x - 1);
  }
  return out;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

ModelPrimitives model_from(const json& j, bool validate) {
  const std::size_t H = size_field(j, "num_states");
  const std::size_t O = size_field(j, "num_emissions");
  const std::size_t X = size_field(j, "num_actions");
  ModelPrimitives m;
  m.num_states = H;
  m.num_emissions = O;
  m.num_actions = X;
  flatten(field(j, "p"), "p", {H}, 0, m.p);
  flatten(field(j, "E"), "E", {H, X, O}, 0, m.E);
  flatten(field(j, "Q"), "Q", {H, O, H}, 0, m.Q);
  m.transition_support.assign(H * O, 0);
  if (validate) {
    const auto report = validate_primitives(m);
    if (!report.ok()) throw InputError("model failed validation:\n" + report.summary());
  }
  return m;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ModelPrimitives parse_model_json(const std::string& text, bool validate) {
  return model_from(parse(text), validate);
}

ModelPrimitives load_model(const std::string& path, bool validate) {
  return parse_model_json(read_text_file(path), validate);
}

std::string model_to_json(const ModelPrimitives& m) {
  json j;
  j["num_states"] = m.H();
  j["num_emissions"] = m.O();
  j["num_actions"] = m.X();
  j["p"] = m.p;
  json E = json::array(), Q = json::array();
  for (std::size_t h = 0; h < m.H(); ++h) {
    json eh = json::array(), qh = json::array();
    for (std::size_t x = 0; x < m.X(); ++x) {
      auto row = m.emission_row(h, x);
      eh.push_back(std::vector<double>(row.begin(), row.end()));
    }
    for (std::size_t i = 0; i < m.O(); ++i) {
      auto row = m.transition_row(h, i);
      qh.push_back(std::vector<double>(row.begin(), row.end()));
    }
    E.push_back(eh);
    Q.push_back(qh);
  }
  j["E"] = E;
  j["Q"] = Q;
  return j.dump(1);
}

void save_model(const std::string& path, const ModelPrimitives& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << model_to_json(m) << '\n';
}

Trajectory parse_trajectory_json(const std::string& text) {
  const json j = parse(text);
  const std::size_t T = size_field(j, "T");
  const int big = std::numeric_limits<int>::max();
  Trajectory tr;
  tr.o = int_array(j, "o", 1, big);
  tr.x = int_array(j, "x", 1, big);
  tr.x_tilde = int_array(j, "x_tilde", 1, big);
  for (auto [name, v] : {std::pair{"o", &tr.o}, {"x", &tr.x}, {"x_tilde", &tr.x_tilde}})
    if (v->size() != T)
      throw StructuralError(std::string("field '") + name + "' has length " +
                            std::to_string(v->size()) + ", expected T = " + std::to_string(T));
  return tr;
}

Trajectory load_trajectory(const std::string& path) {
  return parse_trajectory_json(read_text_file(path));
}

std::string trajectory_to_json(const Trajectory& tr) {
  auto plus1 = [](const std::vector<int>& v) {
    std::vector<int> out(v);
    for (int& x : out) ++x;
    return out;
  };
  json j;
  j["T"] = tr.T();
  j["o"] = plus1(tr.o);
  j["x"] = plus1(tr.x);
  j["x_tilde"] = plus1(tr.x_tilde);
  return j.dump();
}

void save_trajectory(const std::string& path, const Trajectory& tr) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << trajectory_to_json(tr) << '\n';
}

Scenario load_scenario(const std::string& path) {
  const json j = parse(read_text_file(path));
  Scenario sc;
  sc.name = j.value("name", path);
  sc.model = model_from(j, true);
  const int H = static_cast<int>(sc.model.H()), O = static_cast<int>(sc.model.O());
  sc.forbidden_state = H - 1;
  if (j.contains("forbidden_state")) {
    const auto& v = j["forbidden_state"];
    if (!v.is_number_integer() || v.get<int>() < 1 || v.get<int>() > H)
      throw InputError("field 'forbidden_state' must be a state in 1.." + std::to_string(H));
    sc.forbidden_state = v.get<int>() - 1;
  }
  std::vector<int> rh, ro;
  if (j.contains("rank_H")) rh = int_array(j, "rank_H", 1, H);
  if (j.contains("rank_O")) ro = int_array(j, "rank_O", 1, O);
  if (rh.empty() && ro.empty()) {
    sc.ranks = RankOrdering::identity(sc.model);
  } else {
    if (rh.empty()) rh = RankOrdering::identity(sc.model).state_order();
    if (ro.empty()) ro = RankOrdering::identity(sc.model).emission_order();
    sc.ranks = RankOrdering(sc.model, rh, ro);
  }
  if (j.contains("pm_zeros")) {
    const auto& v = j["pm_zeros"];
    if (!v.is_array()) throw ParseError("field 'pm_zeros' must be an array");
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto& t = v[k];
      if (!t.is_array() || t.size() != 6)
        throw ParseError("pm_zeros entry " + std::to_string(k + 1) + " must have 6 integers");
      int a[6];
      for (int c = 0; c < 6; ++c) {
        if (!t[c].is_number_integer()) throw ParseError("pm_zeros entry " + std::to_string(k + 1) + " is not integral");
        a[c] = t[c].get<int>() - 1;
        const int hi = (c == 1 || c == 4) ? O : H;
        if (a[c] < 0 || a[c] >= hi)
          throw InputError("pm_zeros entry " + std::to_string(k + 1) + " out of range");
      }
      sc.pm_zeros.push_back({a[0], a[1], a[2], a[3], a[4], a[5]});
    }
  }
  return sc;
}

}  // namespace cfb
