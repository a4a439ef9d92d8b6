#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "crossrsa/error.hpp"
#include "crossrsa/features.hpp"
#include "crossrsa/image.hpp"
#include "crossrsa/neuro.hpp"
#include "crossrsa/rdm.hpp"
#include "crossrsa/stats.hpp"
#include "crossrsa/toy_data.hpp"
#include "nets.hpp"
#include "temp_dir.hpp"

using namespace crossrsa;

namespace {

const std::filesystem::path kFixtures = CROSSRSA_TEST_FIXTURES;

double image_mean(const Image& img, std::size_t c) {
  double s = 0;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) s += img.at(c, y, x);
  return s / static_cast<double>(img.width * img.height);
}

Image random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  Rng rng(seed);
  auto img = Image::filled(w, h, 0.0);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

TEST(Resize, IntegerUpscalePreservesMean) {
  const auto img = random_image(7, 7, 1);
  const auto big = resize_bilinear(img, 224, 224);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(image_mean(big, c), image_mean(img, c), 1e-12);
}

TEST(Resize, SameSizeIsIdentityAndSolidStaysSolid) {
  const auto img = random_image(224, 224, 2);
  EXPECT_EQ(resize_bilinear(img, 224, 224).data, img.data);
  const auto solid = resize_bilinear(Image::filled(5, 9, 0.25), 224, 224);
  for (double v : solid.data) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Resize, HalfPixelCentresOnTwoPixels) {
  auto img = Image::filled(2, 1, 0.0);
  for (std::size_t c = 0; c < 3; ++c) img.at(c, 0, 1) = 1.0;
  const auto out = resize_bilinear(img, 4, 1);
  // source x = (i + 0.5) / 2 - 0.5 -> -0.25, 0.25, 0.75, 1.25 (clamped)
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 1), 0.25);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 2), 0.75);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 3), 1.0);
}

TEST(Png, RoundTripAtEightBits) {
  auto img = random_image(5, 3, 3);
  for (auto& v : img.data) v = std::round(v * 255.0) / 255.0;
  const auto bytes = encode_png(img);
  const auto back = decode_png(bytes, "x");
  EXPECT_EQ(back.width, 5u);
  for (std::size_t i = 0; i < img.data.size(); ++i) EXPECT_NEAR(back.data[i], img.data[i], 1e-12);
}

TEST(Png, CorruptPayloadNamesStimulus) {
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  try {
    decode_png(junk, "stim42");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("stim42"), std::string::npos);
  }
}

TEST(Stimuli, ExternalManifestWithGrayAndAlphaPngs) {
  const auto set = load_stimulus_set(kFixtures / "stimuli" / "manifest.txt");
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.stimulus_ids, (std::vector<std::string>{"red", "gray", "blue"}));
  EXPECT_EQ(set.domain, StimulusDomain::objects);
  EXPECT_DOUBLE_EQ(set.images[0].at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(set.images[0].at(1, 0, 0), 0.0);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(set.images[1].at(c, 2, 2), 0.2, 1e-12);
  EXPECT_EQ(set.images[2].width, 6u);
  EXPECT_DOUBLE_EQ(set.images[2].at(2, 1, 5), 1.0);
}

TEST(Stimuli, SaveLoadRoundTrip) {
  TempDir dir;
  const auto set = make_toy_stimuli(4, 16, 1);
  save_stimulus_set(set, dir / "m.txt");
  const auto back = load_stimulus_set(dir / "m.txt");
  EXPECT_EQ(back.stimulus_ids, set.stimulus_ids);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < set.images[i].data.size(); ++j)
      EXPECT_NEAR(back.images[i].data[j], set.images[i].data[j], 0.5 / 255.0 + 1e-12);
}

TEST(Stimuli, DuplicateIdAndMissingFileRejected) {
  TempDir dir;
  std::filesystem::copy(kFixtures / "stimuli", dir.path(), std::filesystem::copy_options::recursive);
  std::ofstream(dir / "dup.txt") << "[header]\nformat,crossrsa-stim/1\ndomain,objects\nn_stimuli,2\n"
                                    "[stimuli]\nindex,id,path\n0,red,images/red.png\n1,red,images/gray.png\n";
  EXPECT_THROW(load_stimulus_set(dir / "dup.txt"), DataError);
  std::ofstream(dir / "missing.txt") << "[header]\nformat,crossrsa-stim/1\ndomain,objects\nn_stimuli,1\n"
                                        "[stimuli]\nindex,id,path\n0,red,images/none.png\n";
  EXPECT_THROW(load_stimulus_set(dir / "missing.txt"), DataError);
}

TEST(LayerMap, DefaultsAndOverride) {
  const auto human = LayerRegionMap::defaults(Species::human);
  EXPECT_EQ(human.layer_for("LOC"), "Conv3");
  EXPECT_EQ(human.layer_for("IT"), "FC1");
  const auto macaque = LayerRegionMap::defaults(Species::macaque);
  EXPECT_THROW(macaque.layer_for("LOC"), ConfigError);
  EXPECT_EQ(macaque.regions(), (std::vector<std::string>{"V1", "V2", "V4", "IT"}));
  const auto custom = LayerRegionMap::parse("Conv2:V1, FC2:IT");
  EXPECT_EQ(custom.layer_for("V1"), "Conv2");
  EXPECT_THROW(LayerRegionMap::parse("Conv2"), ConfigError);
}

TEST(Extract, ShapesProvenanceAndDeterminism) {
  auto ckpt = init_network(4, nets::toy_spec());
  ckpt.rule = LearningRule::pc;
  const auto set = make_toy_stimuli(5, 40, 2);
  const auto conv2 = extract_features(ckpt, set, "Conv2", 32, 2);
  EXPECT_EQ(conv2.n_stimuli(), 5u);
  EXPECT_EQ(conv2.n_features(), 8u * 8 * 8);  // 32 -> pooled twice
  EXPECT_EQ(conv2.provenance, (Provenance{"PC", 4, "Conv2"}));
  EXPECT_EQ(conv2.stimulus_ids, set.stimulus_ids);
  EXPECT_TRUE(extract_features(ckpt, set, "Conv2", 32, 3) == conv2);  // batching does not matter
  EXPECT_EQ(extract_features(ckpt, set, "FC1", 32).n_features(), 16u);
  EXPECT_THROW(extract_features(ckpt, set, "Conv7", 32), ConfigError);
}

TEST(Extract, ConvOnlyCheckpointRefusesFcLayers) {
  auto ckpt = init_network(0, nets::toy_spec());
  ckpt.rule = LearningRule::stdp;
  ckpt.has_fc1 = false;
  ckpt.layers[ckpt.spec.fc1_index()] = {};
  const auto set = make_toy_stimuli(3, 16, 2);
  EXPECT_NO_THROW(extract_features(ckpt, set, "Conv3", 16));
  EXPECT_THROW(extract_features(ckpt, set, "FC1", 16), ConfigError);
}

TEST(Extract, DuplicatedStimulusGivesIdenticalRows) {
  const auto ckpt = init_network(4, nets::toy_spec());
  auto set = make_toy_stimuli(3, 16, 2);
  set.images[2] = set.images[0];
  const auto fm = extract_features(ckpt, set, "Conv1", 16);
  for (std::size_t j = 0; j < fm.n_features(); ++j) EXPECT_EQ(fm.features(0, j), fm.features(2, j));
}

TEST(FeatureFile, RoundTripBothEncodings) {
  TempDir dir;
  const auto fm = extract_features(init_network(1, nets::toy_spec()), make_toy_stimuli(4, 16, 3), "Conv3", 16);
  export_features(fm, dir / "f.bin", FileEncoding::binary);
  export_features(fm, dir / "f.txt", FileEncoding::text);
  EXPECT_TRUE(import_external_features(dir / "f.bin") == fm);
  EXPECT_TRUE(import_external_features(dir / "f.txt") == fm);
}

TEST(FeatureFile, HandBuiltExternalFixture) {
  const auto fm = import_external_features(kFixtures / "features_3x4.txt");
  EXPECT_EQ(fm.provenance, (Provenance{"ResNet50", -1, "layer4"}));
  EXPECT_EQ(fm.stimulus_ids, (std::vector<std::string>{"a", "b", "c"}));
  const auto rdm = compute_rdm(fm);
  EXPECT_NEAR(rdm.matrix(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(rdm.matrix(0, 2), 2.0, 1e-15);
  EXPECT_NEAR(rdm.matrix(1, 2), 2.0, 1e-15);
}

TEST(FeatureFile, MissingLayerNamed) {
  TempDir dir;
  std::ofstream(dir / "f.txt") << "[header]\nformat,crossrsa-feat/1\nmodel,X\nseed,0\nn_stimuli,1\nn_features,2\n"
                                  "[stimuli]\nindex,id\n0,a\n[features]\n0,1,2\n";
  try {
    import_external_features(dir / "f.txt");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("layer"), std::string::npos);
  }
}

TEST(FeatureFile, RowCountMismatchRejected) {
  TempDir dir;
  std::ofstream(dir / "f.txt") << "[header]\nformat,crossrsa-feat/1\nmodel,X\nlayer,L\nseed,0\nn_stimuli,2\n"
                                  "n_features,2\n[stimuli]\nindex,id\n0,a\n1,b\n[features]\n0,1,2\n";
  EXPECT_THROW(import_external_features(dir / "f.txt"), DataError);
}

TEST(NeuralFixture, AveragesHandComputedValues) {
  const auto data = load_neural_dataset(kFixtures / "neural_3x2x2.txt");
  const auto avg = average_repetitions(data);
  EXPECT_DOUBLE_EQ(avg.features(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(avg.features(0, 1), 4.0);  // single repetition present
  EXPECT_DOUBLE_EQ(avg.features(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(avg.features(2, 0), 7.0);
  EXPECT_EQ(data.species, Species::macaque);
}
