#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "avgqoc/errors.hpp"
#include "avgqoc/io.hpp"
#include "test_util.hpp"

namespace avgqoc {
namespace {

Json twoStateSystemJson() {
  return Json::parse(R"({"energies": [0.0, 1.0], "V_re": [[0.0, 1.0], [1.0, 0.0]]})");
}

std::string tempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("avgqoc_io_" + name)).string();
}

TEST(SystemJsonTest, ParsesWithoutImaginaryPart) {
  const QuantumSystem sys = systemFromJson(twoStateSystemJson());
  EXPECT_EQ(sys.dim(), 2);
  EXPECT_EQ(sys.coupling()(0, 1), Complex(1.0));
  EXPECT_EQ(sys.energies()(1), 1.0);
}

TEST(SystemJsonTest, RoundTrip) {
  std::mt19937_64 rng(1);
  const QuantumSystem sys(testing::randomEnergies(rng, 4), testing::randomCoupling(rng, 4, true));
  const Json j = Json::parse(systemToJson(sys).dump());
  const QuantumSystem back = systemFromJson(j);
  EXPECT_EQ(back.energies(), sys.energies());
  EXPECT_EQ(back.coupling(), sys.coupling());
}

TEST(SystemJsonTest, SymmetrizesWithWarning) {
  Json j = twoStateSystemJson();
  j["V_re"][1][0] = 0.8;
  ::testing::internal::CaptureStderr();
  const QuantumSystem sys = systemFromJson(j);
  const std::string err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("warning"), std::string::npos);
  EXPECT_NEAR(sys.coupling()(0, 1).real(), 0.9, 1e-15);

  j["V_re"][1][0] = 1.0 + 1e-13;
  ::testing::internal::CaptureStderr();
  systemFromJson(j);
  EXPECT_TRUE(::testing::internal::GetCapturedStderr().empty());
}

TEST(SystemJsonTest, SchemaErrors) {
  EXPECT_THROW(systemFromJson(Json::array()), SchemaError);
  Json j = twoStateSystemJson();
  j.erase("V_re");
  EXPECT_THROW(systemFromJson(j), SchemaError);
  j = twoStateSystemJson();
  j["V_re"] = Json::parse("[[0, 1]]");
  EXPECT_THROW(systemFromJson(j), SchemaError);
  j = twoStateSystemJson();
  j["V_im"] = Json::parse("[[0, 1, 2], [0, 1, 2]]");
  EXPECT_THROW(systemFromJson(j), SchemaError);
  j = twoStateSystemJson();
  j["energies"] = Json::parse(R"([0, "x"])");
  EXPECT_THROW(systemFromJson(j), SchemaError);
  j = twoStateSystemJson();
  j["energies"] = Json::array();
  EXPECT_THROW(systemFromJson(j), SchemaError);
}

TEST(TransferJsonTest, RoundTripAndDefaults) {
  const Json j = Json::parse(R"({"psi0_re": [1, 0], "targets": [0, 1], "T": 31.4})");
  const TransferSpec t = transferFromJson(j, 2);
  EXPECT_EQ(t.psi0(), CVector::Unit(2, 0));
  EXPECT_EQ(t.transferTime(), 31.4);
  const TransferSpec back = transferFromJson(Json::parse(transferToJson(t).dump()), 2);
  EXPECT_EQ(back.psi0(), t.psi0());
  EXPECT_EQ(back.targets(), t.targets());
}

TEST(TransferJsonTest, SchemaErrors) {
  EXPECT_THROW(transferFromJson(Json::parse(R"({"psi0_re": [1, 0], "targets": [0.3, 0.3], "T": 1})"), 2),
               SchemaError);
  EXPECT_THROW(transferFromJson(Json::parse(R"({"psi0_re": [1, 0, 0], "targets": [0, 1], "T": 1})"), 2),
               SchemaError);
  EXPECT_THROW(transferFromJson(Json::parse(R"({"psi0_re": [1, 0], "targets": [0, 1]})"), 2), SchemaError);
  EXPECT_THROW(transferFromJson(Json::parse(R"({"psi0_re": [1, 1], "targets": [0, 1], "T": 1})"), 2),
               SchemaError);
  EXPECT_THROW(transferFromJson(Json::parse(R"({"psi0_re": [1, 0], "targets": [0, 1], "T": -2})"), 2),
               SchemaError);
}

TEST(MatrixJsonTest, Forms) {
  const RMatrix a = matrixFromJson(Json::parse("[[1, 2], [2, 3]]"));
  EXPECT_EQ(a(1, 1), 3.0);
  const RMatrix b = matrixFromJson(Json::parse(R"({"V_re": [[0, 4], [4, 0]]})"));
  EXPECT_EQ(b(0, 1), 4.0);
  EXPECT_THROW(matrixFromJson(Json::parse(R"({"x": 1})")), SchemaError);
  EXPECT_THROW(matrixFromJson(Json::parse("[[1, 2], [3]]")), SchemaError);
}

TEST(FileIoTest, ReadWrite) {
  const std::string path = tempPath("sys.json");
  writeTextFile(path, twoStateSystemJson().dump());
  EXPECT_EQ(readJsonFile(path), twoStateSystemJson());
  writeTextFile(path, "{ not json");
  EXPECT_THROW(readJsonFile(path), SchemaError);
  std::remove(path.c_str());
  EXPECT_THROW(readJsonFile(tempPath("does_not_exist.json")), SchemaError);
}

TEST(ReportJsonTest, ValidationPairsAreOneBased) {
  RVector e(3);
  e << 0.0, 1.0, 2.0;
  CMatrix v = CMatrix::Zero(3, 3);
  v(0, 1) = v(1, 0) = 1.0;
  const Json j = toJson(validate(QuantumSystem(e, v)));
  EXPECT_FALSE(j["graphConnected"].get<bool>());
  EXPECT_EQ(j["offendingPairs"]["degenerateTransitions"], Json::parse("[[2, 1], [3, 2]]"));
  EXPECT_FALSE(j["offendingPairs"]["disconnected"].empty());
  for (const auto& p : j["offendingPairs"]["disconnected"]) {
    EXPECT_GE(p[0].get<int>(), 1);
    EXPECT_GE(p[1].get<int>(), 1);
  }
}

TEST(ReportJsonTest, ShootingResultFields) {
  auto sys = testing::twoLevel();
  RVector targets(2);
  targets << 0.0, 1.0;
  const ShootingProblem pb(sys, CVector::Unit(2, 0), targets);
  const Json j = toJson(shootNewton(pb, RVector::Constant(1, 1.0)));
  for (const char* key : {"cost", "residual", "converged", "seed_re", "seed_im", "gauge_fixed", "jacobian_sigma_min"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["gauge_fixed"].get<bool>());
  EXPECT_NEAR(j["cost"].get<double>(), testing::kPi * testing::kPi / 2.0, 1e-8);
}

TEST(ReportJsonTest, ScalingStudyNullExponent) {
  ScalingStudy st;
  st.table.push_back({10.0, 0.1, 0.2, 1.0});
  st.deviationExponent = -1.0;
  st.notices.push_back("FlatSignal: x");
  const Json j = toJson(st);
  EXPECT_TRUE(j["popErrorExponent"].is_null());
  EXPECT_EQ(j["deviationExponent"].get<double>(), -1.0);
  EXPECT_EQ(j["scalingTable"].size(), 1u);
}

}  // namespace
}  // namespace avgqoc
