#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "triform/bench.hpp"
#include "triform/digest.hpp"
#include "triform/error.hpp"
#include "triform/store.hpp"

using namespace triform;
using namespace triform::store;

namespace {

ActivationTensor ramp(int N, int L, int D) {
  ActivationTensor t("m", N, L, D);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(i) * 0.25f - 3.0f;
  return t;
}

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_digest(std::string_view("")) ==
        "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_digest(std::string_view("abc")) ==
        "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("f32 encoding is explicit about byte order") {
  const float v[] = {1.0f, -2.5f};
  const auto le = encode_f32(v, 2, ByteOrder::little);
  const auto be = encode_f32(v, 2, ByteOrder::big);
  REQUIRE(le.size() == 8);
  // 1.0f = 0x3F800000
  CHECK(static_cast<unsigned char>(le[3]) == 0x3F);
  CHECK(static_cast<unsigned char>(le[2]) == 0x80);
  CHECK(static_cast<unsigned char>(be[0]) == 0x3F);
  float back[2];
  decode_f32(be, back, 2, ByteOrder::big);
  CHECK(back[0] == 1.0f);
  CHECK(back[1] == -2.5f);
}

TEST_CASE("tensor round trip") {
  const auto dir = testing::scratch_dir("store_rt");
  const auto set = bench::generate_benchmark(0);
  const auto labels = bench::label_table(set);
  auto t = ramp(324, 2, 3);
  for (auto order : {ByteOrder::little, ByteOrder::big}) {
    WriteOptions wo;
    wo.byte_order = order;
    wo.created_utc = "2020-01-01T00:00:00Z";
    const auto m = write_tensor(t, labels, dir / "m", wo);
    CHECK(m.n_stimuli == 324);
    const auto r = read_tensor(dir / "m");
    CHECK(r.tensor.data == t.data);
    CHECK(r.labels.rows[5].stimulus_id == labels.rows[5].stimulus_id);
    CHECK(r.manifest.created_utc == "2020-01-01T00:00:00Z");
    CHECK(!r.provenance_mismatch);
  }
}

TEST_CASE("provenance check against the stimulus file") {
  const auto dir = testing::scratch_dir("store_prov");
  const auto set = bench::generate_benchmark(0);
  const auto text = bench::to_jsonl(set);
  atomic_write(dir / "stim.jsonl", text);
  WriteOptions wo;
  wo.stimulus_digest = sha256_digest(text);
  write_tensor(ramp(324, 1, 2), bench::label_table(set), dir / "m", wo);
  ReadOptions ro;
  ro.stimulus_file = dir / "stim.jsonl";
  CHECK(!read_tensor(dir / "m", ro).provenance_mismatch);

  atomic_write(dir / "other.jsonl", bench::to_jsonl(bench::generate_benchmark(1)));
  ro.stimulus_file = dir / "other.jsonl";
  const auto r = read_tensor(dir / "m", ro);
  CHECK(r.provenance_mismatch);
  CHECK(!r.warnings.empty());
}

TEST_CASE("corrupt files are rejected") {
  const auto dir = testing::scratch_dir("store_bad");
  const auto labels = bench::label_table(bench::generate_benchmark(0));
  write_tensor(ramp(324, 2, 3), labels, dir / "m");
  SUBCASE("truncated data") {
    auto bytes = read_file(dir / "m.acts");
    bytes.resize(bytes.size() - 4);
    atomic_write(dir / "m.acts", bytes);
    try {
      read_tensor(dir / "m");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("N=324 L=2 D=3") != std::string::npos);
    }
  }
  SUBCASE("bad dtype") {
    auto m = manifest_from_json(read_file(dir / "m.manifest.json"));
    m.dtype = "f16";
    atomic_write(dir / "m.manifest.json", manifest_to_json(m));
    CHECK_THROWS_AS(read_tensor(dir / "m"), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(read_tensor(dir / "nope"), IoError); }
}

TEST_CASE("non-finite values are reported with their position") {
  auto t = ramp(4, 2, 3);
  t.at(2, 1, 0) = std::numeric_limits<float>::quiet_NaN();
  t.at(3, 0, 2) = std::numeric_limits<float>::infinity();
  try {
    validate_tensor(t);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 non-finite") != std::string::npos);
    CHECK(msg.find("(n=2, l=1, d=0)") != std::string::npos);
  }
}

TEST_CASE("label count must match") {
  auto labels = bench::label_table(bench::generate_benchmark(0));
  labels.rows.pop_back();
  CHECK_THROWS_AS(validate_pair(ramp(324, 1, 1), labels), ContractViolation);
}

TEST_CASE("canonical order and reorder") {
  auto labels = bench::label_table(bench::generate_benchmark(0));
  auto t = ramp(324, 1, 2);
  // Reverse, then restore.
  std::vector<int> rev(324);
  for (int i = 0; i < 324; ++i) rev[static_cast<std::size_t>(i)] = 323 - i;
  auto t2 = t;
  auto l2 = labels;
  reorder(t2, l2, rev);
  CHECK(l2.rows[0].stimulus_id == "c18_i2_structured");
  CHECK(t2.at(0, 0, 1) == t.at(323, 0, 1));
  const auto order = canonical_order(l2);
  reorder(t2, l2, order);
  CHECK(t2.data == t.data);
  CHECK(l2.rows[0].stimulus_id == labels.rows[0].stimulus_id);
}

TEST_CASE("slices widen exactly") {
  const auto t = ramp(5, 3, 4);
  const auto X = slice_layer(t, 2);
  CHECK(X(4, 3) == static_cast<double>(t.at(4, 2, 3)));
  const auto Y = slice_rows(t, 1, {4, 0});
  CHECK(Y(0, 0) == static_cast<double>(t.at(4, 1, 0)));
  CHECK(Y(1, 0) == static_cast<double>(t.at(0, 1, 0)));
  CHECK_THROWS_AS(slice_layer(t, 3), InvalidArgument);
}
