#include "vkstab/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace vkstab {

namespace {

nlohmann::json model_json(const ModelParams& m) {
  if (const auto* s = std::get_if<SingleNls>(&m)) return {{"name", "nls"}, {"p", s->p}, {"d", s->d}};
  const auto& c = std::get<Coupled>(m);
  return {{"name", "coupled"}, {"alpha", c.alpha}, {"gamma", c.gamma}, {"delta", c.delta},
          {"beta", c.beta},    {"k", c.k}};
}

ModelParams model_from(const nlohmann::json& j) {
  const std::string name = j.at("name").get<std::string>();
  if (name == "nls") return SingleNls{j.at("p").get<double>(), j.value("d", 1)};
  if (name == "coupled")
    return Coupled{j.at("alpha").get<double>(), j.at("gamma").get<double>(), j.at("delta").get<double>(),
                   j.value("beta", 1.0), j.value("k", 0.0)};
  throw InvalidArgument("unknown model '" + name + "'");
}

}  // namespace

std::string profile_json(const Profile& prof) {
  nlohmann::json j;
  j["schema"] = 1;
  j["model"] = model_json(prof.model);
  const Grid& g = prof.grid();
  j["grid"] = {{"kind", to_string(g.kind())}, {"extent", g.extent()}, {"n", g.size()}};
  j["xi"] = std::vector<double>(prof.xi.data(), prof.xi.data() + prof.xi.size());
  j["residual"] = prof.residual;
  const Invariants inv = invariants_of(prof.field, prof.model);
  j["invariants"] = {{"H", inv.H}, {"F", std::vector<double>(inv.F.data(), inv.F.data() + inv.F.size())}};
  nlohmann::json values = nlohmann::json::array();
  for (int c = 0; c < prof.field.components(); ++c) {
    std::vector<double> v;
    v.reserve(2 * g.size());
    for (int i = 0; i < g.size(); ++i) {
      v.push_back(prof.field[c][i].real());
      v.push_back(prof.field[c][i].imag());
    }
    values.push_back(v);
  }
  j["values"] = values;
  return j.dump(1);
}

Profile profile_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("profile file is not valid JSON: ") + e.what());
  }
  try {
    const auto& gj = j.at("grid");
    const Grid g(grid_kind_from_string(gj.at("kind").get<std::string>()), gj.at("extent").get<double>(),
                 gj.at("n").get<int>());
    Profile prof{model_from(j.at("model")), Field(g, 1), Vec(), 0.0};
    validate(prof.model);
    const auto& values = j.at("values");
    if (static_cast<int>(values.size()) != components_of(prof.model))
      throw InvalidArgument("profile file has the wrong number of components");
    std::vector<CVec> comps;
    for (const auto& arr : values) {
      const auto v = arr.get<std::vector<double>>();
      if (static_cast<int>(v.size()) != 2 * g.size()) throw InvalidArgument("profile values do not match the grid");
      CVec u(g.size());
      for (int i = 0; i < g.size(); ++i) u[i] = cplx(v[2 * i], v[2 * i + 1]);
      comps.push_back(std::move(u));
    }
    prof.field = Field(g, std::move(comps));
    const auto xi = j.at("xi").get<std::vector<double>>();
    prof.xi = Eigen::Map<const Vec>(xi.data(), static_cast<Eigen::Index>(xi.size()));
    if (prof.xi.size() != group_dim(prof.model, g)) throw InvalidArgument("profile xi has the wrong length");
    prof.residual = frame_residual(prof);
    return prof;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed profile file: ") + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace vkstab
