#include <bit>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "gradfield/json_io.hpp"
#include "gradfield/param_vector.hpp"
#include "gradfield/serialization.hpp"

using namespace gradfield;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "gradfield_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.data()[i]) != std::bit_cast<std::uint64_t>(b.data()[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("17 significant digits round-trip every double") {
  const double values[] = {0.1, 1.0 / 3.0, -0.0, 5e-324, 1.7976931348623157e308, -2.5e-17,
                           6.02214076e23};
  for (double v : values) {
    const std::string s = format_double(v);
    CHECK(std::bit_cast<std::uint64_t>(std::strtod(s.c_str(), nullptr)) == std::bit_cast<std::uint64_t>(v));
    Json doc = Json::array({v});
    CHECK(std::bit_cast<std::uint64_t>(Json::parse(dump_json(doc))[0].get<double>()) ==
          std::bit_cast<std::uint64_t>(v));
  }
}

TEST_CASE("dump is byte-stable and keeps floats floats") {
  Json doc;
  doc["b"] = 2.0;
  doc["a"] = Json::array({1, 2.5, -0.0});
  doc["nested"] = {{"nan", std::numeric_limits<double>::quiet_NaN()}};
  const std::string once = dump_json(doc);
  CHECK(once == dump_json(Json::parse(dump_json(doc))));
  const Json back = Json::parse(once);
  CHECK(back["b"].is_number_float());
  CHECK(back["a"][0].is_number_integer());
  CHECK(std::signbit(back["a"][2].get<double>()));
  CHECK(back["nested"]["nan"].is_null());
  CHECK(once.find("\"b\"") < once.find("\"a\""));  // insertion order preserved
}

TEST_CASE("param layout indexing is row-major") {
  ad::ParamLayout layout;
  CHECK(layout.add_block("a", 2, 3) == 0);
  CHECK(layout.add_block("b", 4, 1) == 1);
  CHECK(layout.size() == 10);
  CHECK(layout.index(0, 1, 2) == 5);
  CHECK(layout.index(1, 3, 0) == 9);
  CHECK_THROWS(layout.index(0, 2, 0));
  Matrix a(2, 3);
  a << 1, 2, 3, 4, 5, 6;
  const auto pv = ad::ParamVector::from_blocks(layout, {a, Matrix::Constant(4, 1, 7.0)});
  CHECK(pv.values()[3] == 4.0);
  CHECK(pv.block(0) == a);
  CHECK(pv.to_blocks()[1] == Matrix::Constant(4, 1, 7.0));
  CHECK_THROWS_AS(ad::ParamVector::from_blocks(layout, {a}), DimensionError);
}

TEST_CASE("networks survive a save/load bit for bit") {
  const Network nets[] = {
      MlpParams::random({3, 7, 5, 1}, NetMode::phi, Activation::silu(4.0), 1),
      MlpParams::random({2, 6, 2}, NetMode::psi, Activation::softplus(), 2),
      tie_weights(Matrix::Random(5, 2), Vector::Random(5), Activation::tanh()),
  };
  int i = 0;
  for (const auto& net : nets) {
    const auto path = scratch("net" + std::to_string(i++) + ".json");
    save_network(path, net);
    const Network back = load_network(path);
    REQUIRE(back.index() == net.index());
    if (const auto* m = std::get_if<MlpParams>(&net)) {
      const auto& b = std::get<MlpParams>(back);
      CHECK(b.widths == m->widths);
      CHECK(b.mode == m->mode);
      CHECK(b.activation == m->activation);
      for (int l = 0; l < m->depth(); ++l) CHECK(same_bits(b.weights[l], m->weights[l]));
    } else {
      const auto& t = std::get<TiedPsiNet>(net);
      const auto& b = std::get<TiedPsiNet>(back);
      CHECK(same_bits(b.theta0, t.theta0));
      CHECK(same_bits(b.s, t.s));
      CHECK(b.activation == t.activation);
    }
    CHECK(dump_json(network_to_json(back)) == dump_json(network_to_json(net)));
    CHECK(network_dim(back) == network_dim(net));
  }
}

TEST_CASE("malformed network documents name the bad field") {
  const Json good = network_to_json(MlpParams::random({2, 3, 1}, NetMode::phi, {}, 1));
  CHECK_NOTHROW(network_from_json(good));

  Json doc = good;
  doc["weights"][1]["data"][2] = "x";
  CHECK_THROWS_WITH_AS(network_from_json(doc), doctest::Contains("network.weights[1].data[2]"),
                       ConfigError);
  doc = good;
  doc["weights"][0]["rows"] = 4;
  CHECK_THROWS_WITH_AS(network_from_json(doc), doctest::Contains("network.weights[0]"), ConfigError);
  doc = good;
  doc["kind"] = "mlp_chi";
  CHECK_THROWS_WITH_AS(network_from_json(doc), doctest::Contains("network.kind"), ConfigError);
  doc = good;
  doc["schema_version"] = 2;
  CHECK_THROWS_AS(network_from_json(doc), ConfigError);
  doc = good;
  doc["extra"] = 1;
  CHECK_THROWS_WITH_AS(network_from_json(doc), doctest::Contains("network.extra"), ConfigError);
  doc = good;
  doc["activation"]["beta"] = -1.0;
  CHECK_THROWS_WITH_AS(network_from_json(doc), doctest::Contains("network.activation.beta"),
                       ConfigError);
  doc = good;
  doc["widths"] = Json::array({2, 1});
  CHECK_THROWS_AS(network_from_json(doc), ConfigError);

  CHECK_THROWS_AS(load_network(scratch("does_not_exist.json")), ConfigError);
  std::ofstream(scratch("garbage.json")) << "{ not json";
  CHECK_THROWS_AS(load_network(scratch("garbage.json")), ConfigError);
}
