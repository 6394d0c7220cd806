#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "pcmc/datagen.hpp"
#include "pcmc/encoder.hpp"
#include "pcmc/errors.hpp"
#include "pcmc/schema.hpp"
#include "pcmc/session.hpp"

using namespace pcmc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "pcmc_test_schema";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("schema round-trips through JSON") {
  const FeatureSchema schema = datagen::airline_schema();
  const std::string text = schema_to_json(schema);
  const FeatureSchema back = schema_from_json(text);
  CHECK(schema_to_json(back) == text);
  CHECK(back.individual_fields.size() == 7);
  CHECK(back.alternative_fields.size() == 8);
  CHECK(back.alternative_fields[0].cardinality == 63);
  CHECK(back.alternative_fields[1].range_lo == doctest::Approx(77.15));
  CHECK(back.alternative_fields[1].range_hi == doctest::Approx(16781.5));
}

TEST_CASE("schema validation rejects duplicates and zero cardinality") {
  FeatureSchema dup;
  dup.alternative_fields.push_back({"x", FieldKind::numeric, 0, 0, 1});
  dup.alternative_fields.push_back({"x", FieldKind::numeric, 0, 0, 1});
  CHECK_THROWS_AS(dup.validate(), ValidationError);

  FeatureSchema zero;
  zero.alternative_fields.push_back({"c", FieldKind::categorical, 0, 0, 0});
  CHECK_THROWS_AS(zero.validate(), ValidationError);
}

TEST_CASE("session JSONL line format round-trips") {
  const FeatureSchema schema = datagen::context_schema();
  Session s;
  s.alternatives.resize(3);
  s.alternatives[0].numeric = {4.0, 6.0};
  s.alternatives[1].numeric = {6.0, 4.0};
  s.alternatives[2].numeric = {2.5, 7.25};
  s.chosen_index = 2;

  const std::string line = session_to_json_line(s, schema);
  CHECK(line.find("\"choice\":2") != std::string::npos);
  const Session back = session_from_json_line(line, schema);
  CHECK(back.chosen_index == 2);
  CHECK(back.alternatives[2].numeric[1] == doctest::Approx(7.25));
}

TEST_CASE("session parsing rejects malformed input") {
  const FeatureSchema schema = datagen::context_schema();
  CHECK_THROWS_AS(session_from_json_line("not json", schema), ValidationError);
  CHECK_THROWS_AS(
      session_from_json_line(R"({"individual":{},"alternatives":[],"choice":0})", schema),
      ValidationError);
  // choice out of range
  CHECK_THROWS_AS(session_from_json_line(
                      R"({"individual":{},"alternatives":[{"attr1":1.0,"attr2":2.0}],"choice":1})",
                      schema),
                  ValidationError);
  // missing field
  CHECK_THROWS_AS(
      session_from_json_line(
          R"({"individual":{},"alternatives":[{"attr1":1.0}],"choice":0})", schema),
      ValidationError);
  // wrong kind
  CHECK_THROWS_AS(session_from_json_line(
                      R"({"individual":{},"alternatives":[{"attr1":"a","attr2":2.0}],"choice":0})",
                      schema),
                  ValidationError);
}

TEST_CASE("dataset files round-trip byte-identically") {
  const fs::path dir = temp_dir();
  const FeatureSchema schema = datagen::context_schema();
  const Dataset data = datagen::sample_context_sessions(50, 1234);

  const fs::path path = dir / "sessions.jsonl";
  save_sessions_jsonl(data, schema, path);
  const Dataset loaded = load_sessions_jsonl(path, schema);
  REQUIRE(loaded.size() == data.size());

  const fs::path path2 = dir / "sessions2.jsonl";
  save_sessions_jsonl(loaded, schema, path2);
  std::ifstream a(path), b(path2);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
}

TEST_CASE("missing files raise IoError") {
  const FeatureSchema schema = datagen::context_schema();
  CHECK_THROWS_AS(load_schema("/nonexistent/schema.json"), IoError);
  CHECK_THROWS_AS(load_sessions_jsonl("/nonexistent/data.jsonl", schema), IoError);
}

TEST_CASE("encoder standardizes numerics and maps unseen levels to the OOV row") {
  FeatureSchema schema;
  schema.alternative_fields.push_back({"brand", FieldKind::categorical, 5, 0, 0});
  schema.alternative_fields.push_back({"price", FieldKind::numeric, 0, 0, 100});

  FeatureTuple t1{{10.0}, {"acme"}};
  FeatureTuple t2{{30.0}, {"zeta"}};
  const std::vector<const FeatureTuple*> tuples{&t1, &t2};
  const FeatureEncoder enc = FeatureEncoder::fit(schema.alternative_fields, tuples);

  // mean 20, population std 10
  CHECK(enc.standardized(t1)[0] == doctest::Approx(-1.0));
  CHECK(enc.standardized(t2)[0] == doctest::Approx(1.0));

  CHECK(enc.categorical_rows(t1)[0] == 0);  // "acme" sorts first
  CHECK(enc.categorical_rows(t2)[0] == 1);
  FeatureTuple unseen{{50.0}, {"nobody"}};
  CHECK(enc.categorical_rows(unseen)[0] == 5);  // OOV row = declared cardinality
}

TEST_CASE("encoder rejects more levels than the declared cardinality") {
  FeatureSchema schema;
  schema.alternative_fields.push_back({"c", FieldKind::categorical, 2, 0, 0});
  FeatureTuple a{{}, {"x"}}, b{{}, {"y"}}, c{{}, {"z"}};
  const std::vector<const FeatureTuple*> tuples{&a, &b, &c};
  CHECK_THROWS_AS(FeatureEncoder::fit(schema.alternative_fields, tuples), ValidationError);
}

TEST_CASE("constant numeric fields standardize as a pure shift") {
  FeatureSchema schema;
  schema.alternative_fields.push_back({"p", FieldKind::numeric, 0, 0, 1});
  FeatureTuple a{{3.0}, {}}, b{{3.0}, {}};
  const std::vector<const FeatureTuple*> tuples{&a, &b};
  const FeatureEncoder enc = FeatureEncoder::fit(schema.alternative_fields, tuples);
  CHECK(enc.standardized(a)[0] == doctest::Approx(0.0));
}
