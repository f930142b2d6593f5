#include "eud/checkpoint.hpp"
#include "eud/pipeline.hpp"
#include "testkit.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>

using namespace eud;

namespace
{
Checkpoint sample(bool mtl)
{
  Checkpoint c{testkit::tiny_model(6, 5, 3, mtl, 9), TrainConfig{}, 4, {0.25, 0.5, 0.5}};
  c.train.seed = 17;
  c.train.learning_rate = 0.003;
  return c;
}

}  // namespace

TEST_CASE("serialize then deserialize is bit exact")
{
  for (const bool mtl : {false, true}) {
    const auto c = sample(mtl);
    const auto bytes = serialize_checkpoint(c);
    const auto back = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    CHECK(back.epoch == 4);
    CHECK(back.dev_history == c.dev_history);
    CHECK(back.train.seed == 17);
    CHECK(back.train.learning_rate == 0.003);
    CHECK(back.model.labels.size() == 3);
    CHECK(back.model.hyper.mtl_enabled == mtl);
    CHECK(back.model.params.edge.hidden_weight == c.model.params.edge.hidden_weight);

    std::mt19937_64 rng(3);
    const auto s = testkit::tiny_sentence(rng, 4, 3, false);
    CHECK(parse_sentence(back.model, s) == parse_sentence(c.model, s));
  }
}

TEST_CASE("header layout")
{
  const auto bytes = serialize_checkpoint(sample(false));
  CHECK(bytes.substr(0, 8) == "EUDCKPT\n");
  CHECK(static_cast<unsigned char>(bytes[8]) == kCheckpointFormatVersion);
  CHECK(bytes[9] == 0);
}

TEST_CASE("any flipped byte, truncation, or other version is rejected")
{
  const auto bytes = serialize_checkpoint(sample(true));
  for (std::size_t i = 0; i < bytes.size(); i += 1 + bytes.size() / 97) {
    auto bad = bytes;
    bad[i] = static_cast<char>(bad[i] ^ 0x5a);
    CHECK_THROWS_AS(deserialize_checkpoint(bad), CheckpointError);
  }
  CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), CheckpointError);
  CHECK_THROWS_AS(deserialize_checkpoint(""), CheckpointError);
  auto other = bytes;
  other[8] = 2;
  try {
    deserialize_checkpoint(other);
    FAIL("expected an error");
  } catch (const CheckpointError & e) {
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }
}

TEST_CASE("files round trip")
{
  const auto path = (std::filesystem::temp_directory_path() / "eud_test_checkpoint.bin").string();
  const auto c = sample(false);
  save_checkpoint(c, path);
  CHECK(serialize_checkpoint(load_checkpoint(path)) == serialize_checkpoint(c));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}
