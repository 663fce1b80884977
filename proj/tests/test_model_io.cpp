#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "test_util.hpp"
#include "wrep/errors.hpp"
#include "wrep/model.hpp"

using namespace wrep;

TEST_CASE("model file round trip is bit-exact") {
  testing::TempDir dir;
  const Dataset d = testing::small_synthetic(40, 3, 2.0);
  PositioningModel m = testing::random_model(d, 5, 15, 16);
  m.network.inner[0].norm.running_var[0] = 0.1 + 1e-17 * 3;
  m.network.inner[1].norm.running_mean[2] = -1.0 / 3.0;
  m.network.output.bias = {1e-300, 123456789.125};
  save_model(m, dir / "m.json");
  const PositioningModel back = load_model(dir / "m.json");
  CHECK(back == m);
  CHECK(back.predict(d) == m.predict(d));

  const std::string text = testing::read_file(dir / "m.json");
  save_model(back, dir / "m2.json");
  CHECK(testing::read_file(dir / "m2.json") == text);
}

TEST_CASE("json emitter prints 17 significant digits") {
  nlohmann::json j;
  j["a"] = 0.1;
  j["b"] = 2.0;
  j["c"] = std::uint64_t{18446744073709551615ULL};
  j["d"] = "x";
  const std::string s = dump_json(j);
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("2.0") != std::string::npos);
  CHECK(s.find("18446744073709551615") != std::string::npos);
  CHECK(nlohmann::json::parse(s)["a"].get<double>() == 0.1);

  j["e"] = std::nan("");
  CHECK_THROWS_AS(dump_json(j), NumericalError);
}

TEST_CASE("schema errors name the field") {
  const Dataset d = testing::small_synthetic(10, 3);
  nlohmann::json j = to_json(testing::random_model(d, 1));
  j["parameters"].erase("kolmogorov");
  CHECK_THROWS_WITH_AS(model_from_json(j), doctest::Contains("kolmogorov"), DataError);

  j = to_json(testing::random_model(d, 1));
  j["scaler_params"]["medians"] = nlohmann::json::array({1.0});
  CHECK_THROWS_AS(model_from_json(j), DataError);

  j = to_json(testing::random_model(d, 1));
  j["format_version"] = 99;
  CHECK_THROWS_WITH_AS(model_from_json(j), doctest::Contains("format_version"), DataError);

  j = to_json(testing::random_model(d, 1));
  j["parameters"]["output"]["weights"][0] = "oops";
  CHECK_THROWS_AS(model_from_json(j), DataError);
}
