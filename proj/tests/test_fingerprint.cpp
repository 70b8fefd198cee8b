#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tgmon/fingerprint.hpp"
#include "tgmon/synth.hpp"

using namespace tgmon;

namespace {

Image random_image(synth::Rng& rng, int w, int h, int channels) {
  Image img(w, h, channels);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

ShingleSet set_of(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return ShingleSet{v};
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
  auto s = read_text(p);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(Image, LumaWeights) {
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 1) = 100;
  auto g = to_grayscale(img);
  EXPECT_DOUBLE_EQ(g.at(0, 0), 0.299 * 255);
  EXPECT_DOUBLE_EQ(g.at(1, 0), 0.587 * 100);
}

TEST(Image, CornerAlignedResizeHitsTheCorners) {
  GrayImage src(3, 2);
  src.values = {0, 10, 20, 30, 40, 50};
  auto dst = resize_bilinear(src, 5, 3);
  EXPECT_DOUBLE_EQ(dst.at(0, 0), 0);
  EXPECT_DOUBLE_EQ(dst.at(4, 0), 20);
  EXPECT_DOUBLE_EQ(dst.at(0, 2), 30);
  EXPECT_DOUBLE_EQ(dst.at(4, 2), 50);
  EXPECT_DOUBLE_EQ(dst.at(1, 0), 5);   // x = 0.5
  EXPECT_DOUBLE_EQ(dst.at(2, 1), 25);  // x = 1, y = 0.5
}

TEST(Image, PngRoundTripIsLossless) {
  synth::Rng rng(3);
  for (int c : {1, 3}) {
    auto img = random_image(rng, 17, 9, c);
    auto back = decode_image(encode_png(img));
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, img);
  }
}

TEST(Image, GarbageIsUndecodable) {
  std::vector<std::uint8_t> junk = {'G', 'I', 'F', '8', '9', 'a', 1, 2, 3};
  EXPECT_FALSE(decode_image(junk));
  std::vector<std::uint8_t> truncated_png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0};
  EXPECT_FALSE(decode_image(truncated_png));
  EXPECT_FALSE(decode_image({}));
}

TEST(PHash, ConstantImagesHashToZero) {
  for (auto [w, h] : {std::pair{1, 1}, {7, 3}, {32, 32}, {500, 301}}) {
    for (std::uint8_t v : {0, 1, 128, 255}) {
      Image gray(w, h, 1);
      std::fill(gray.pixels.begin(), gray.pixels.end(), v);
      EXPECT_EQ(phash64(gray).bits, 0u) << w << "x" << h << " v=" << int(v);
      Image rgb(w, h, 3);
      for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(v + i % 3 * 37);
      EXPECT_EQ(phash64(rgb).bits, 0u) << w << "x" << h;
    }
  }
}

TEST(PHash, DcBitIsAlwaysClear) {
  synth::Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    auto h = phash64(random_image(rng, 20 + i, 40, 3));
    EXPECT_EQ(h.bits >> 63, 0u);
  }
}

TEST(PHash, MatchesDirectEvaluation) {
  synth::Rng rng(64);
  for (int i = 0; i < 150; ++i) {
    int w = static_cast<int>(rng.between(1, 90));
    int h = static_cast<int>(rng.between(1, 90));
    Image img = i % 2 ? random_image(rng, w, h, i % 3 ? 3 : 1)
                      : synth::smooth_image(rng, std::max(w, 8), std::max(h, 8));
    if (std::all_of(img.pixels.begin(), img.pixels.end(), [&](auto p) { return p == img.pixels[0]; })) continue;
    ASSERT_EQ(phash64(img).bits, oracle::naive_phash(img)) << "image " << i << " " << img.width << "x" << img.height;
  }
}

TEST(PHash, DeterministicAndHexRoundTrip) {
  synth::Rng rng(8);
  auto img = synth::smooth_image(rng, 64, 48);
  EXPECT_EQ(phash64(img), phash64(img));
  auto h = phash64(img);
  EXPECT_EQ(PHash64::from_hex(h.hex()), h);
  EXPECT_FALSE(PHash64::from_hex("123"));
}

TEST(Hamming, Examples) {
  PHash64 h{0x0123456789abcdefULL};
  EXPECT_EQ(hamming(h, h), 0);
  EXPECT_EQ(hamming(PHash64{0}, PHash64{~0ULL}), 64);
  EXPECT_EQ(hamming(PHash64{0b1010}, PHash64{0b0110}), 2);
}

TEST(Hamming, MetricPropertiesOnRandomPairs) {
  synth::Rng rng(10000);
  for (int i = 0; i < 10000; ++i) {
    PHash64 a{rng.next()}, b{rng.next()}, c{rng.next()};
    if (i % 4 == 0) b.bits = a.bits ^ (std::uint64_t{1} << rng.below(64));
    const int ab = hamming(a, b);
    ASSERT_EQ(ab, oracle::bitwise_hamming(a.bits, b.bits));
    ASSERT_EQ(ab, hamming(b, a));
    ASSERT_EQ(ab == 0, a == b);
    ASSERT_GE(ab, 0);
    ASSERT_LE(ab, 64);
    ASSERT_LE(hamming(a, c), ab + hamming(b, c));
  }
}

TEST(Corpus, HashesAndDistanceBounds) {
  const std::filesystem::path dir = std::filesystem::path(TGMON_TEST_DATA) / "corpus";
  auto expected = json::parse(read_text(dir / "expected.json"));
  ASSERT_EQ(expected.size(), 20u);
  std::vector<PHash64> originals;
  for (const auto& [name, e] : expected.items()) {
    auto img = decode_image(file_bytes(dir / name));
    ASSERT_TRUE(img) << name;
    EXPECT_EQ(img->width, e.at("width").get<int>());
    EXPECT_EQ(img->channels, e.at("channels").get<int>());
    auto h = phash64(*img);
    EXPECT_EQ(h.hex(), e.at("phash").get<std::string>()) << name;

    auto small = resize_bilinear(*img, static_cast<int>(std::lround(img->width * 0.8)),
                                 static_cast<int>(std::lround(img->height * 0.8)));
    auto h_small = phash64(small);
    EXPECT_EQ(h_small.hex(), e.at("phash_downscaled").get<std::string>()) << name;
    EXPECT_LE(hamming(h, h_small), 10) << name;

    auto jpeg = decode_image(encode_jpeg(*img, 75));
    ASSERT_TRUE(jpeg);
    EXPECT_LE(hamming(h, phash64(*jpeg)), 10) << name;
    originals.push_back(h);
  }
  for (std::size_t i = 0; i < originals.size(); ++i) {
    for (std::size_t j = i + 1; j < originals.size(); ++j) {
      EXPECT_GE(hamming(originals[i], originals[j]), 20) << i << " vs " << j;
    }
  }
}

TEST(Text, NormalizationExamples) {
  EXPECT_EQ(text_shingles("Bom dia Brasil").shingles, std::vector<std::string>{"bom dia brasil"});
  EXPECT_EQ(text_shingles("Olá").shingles, std::vector<std::string>{"olá"});
  EXPECT_TRUE(text_shingles("").empty());
  EXPECT_TRUE(text_shingles(" \t\n ").empty());
  EXPECT_TRUE(text_shingles("!!! 🔥🔥 ...").empty());
}

TEST(Text, NormalizationDetails) {
  EXPECT_EQ(normalize_text("  BOM   dia,\tBRASIL!!! "), "bom dia brasil");
  // NFD input normalizes to the same string as NFC input.
  EXPECT_EQ(normalize_text("nac\xcc\xa7" "a\xcc\x83" "o"), normalize_text("nação"));
  EXPECT_EQ(normalize_text("nação"), "nação");
  EXPECT_EQ(normalize_text("🔥 Urgente ❤️ compartilhem"), "urgente compartilhem");
  EXPECT_EQ(normalize_text("zero​width"), "zerowidth");
  EXPECT_EQ(normalize_text("ÉPOCA"), "época");
}

TEST(Text, ShinglesAreWordTrigrams) {
  auto s = text_shingles("a b c d a b c");
  EXPECT_EQ(s.shingles, (std::vector<std::string>{"a b c", "b c d", "c d a", "d a b"}));
  EXPECT_EQ(text_shingles("um dois").shingles, (std::vector<std::string>{"dois", "um"}));
  EXPECT_EQ(text_shingles("um um").shingles, std::vector<std::string>{"um"});
}

TEST(Jaccard, Cases) {
  auto abc = set_of({"a", "b", "c"});
  EXPECT_DOUBLE_EQ(jaccard(abc, abc), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(abc, set_of({"x", "y"})), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(abc, set_of({"b", "c", "d"})), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(ShingleSet{}, ShingleSet{}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(ShingleSet{}, abc), 0.0);
}

TEST(Jaccard, PropertiesOnRandomSets) {
  synth::Rng rng(77);
  const std::vector<std::string> universe = {"a", "b", "c", "d", "e", "f", "g", "h"};
  for (int i = 0; i < 5000; ++i) {
    std::vector<std::string> va, vb;
    for (const auto& u : universe) {
      if (rng.chance(0.4)) va.push_back(u);
      if (rng.chance(0.4)) vb.push_back(u);
    }
    auto a = set_of(va), b = set_of(vb);
    const double j = jaccard(a, b);
    ASSERT_DOUBLE_EQ(j, jaccard(b, a));
    ASSERT_DOUBLE_EQ(j, oracle::set_jaccard(va, vb));
    ASSERT_EQ(j == 1.0, a.shingles == b.shingles);
    ASSERT_GE(j, 0.0);
    ASSERT_LE(j, 1.0);
  }
}

TEST(FingerprintMessage, DispatchesByKind) {
  RawMessage text{"1", "c", {}, {}, MediaKind::text, "Bom  dia!", std::nullopt};
  auto tf = std::get<Fingerprint>(fingerprint_message(text, nullptr));
  const auto& t = std::get<TextFingerprint>(tf.value);
  EXPECT_EQ(t.normalized, "bom dia");
  EXPECT_EQ(tf.hex(), checksum128("bom dia").hex());

  BlobRef video_ref{checksum128("video"), 5, MediaKind::video};
  RawMessage video{"2", "c", {}, {}, MediaKind::video, std::nullopt, video_ref};
  auto vf = std::get<Fingerprint>(fingerprint_message(video, nullptr));
  EXPECT_EQ(std::get<Checksum128>(vf.value), video_ref.checksum);

  BlobRef img_ref{checksum128("junk"), 4, MediaKind::image};
  RawMessage broken{"3", "c", {}, {}, MediaKind::image, std::nullopt, img_ref};
  BlobReader junk = [](const BlobRef&) { return std::vector<std::uint8_t>{'j', 'u', 'n', 'k'}; };
  auto failure = std::get<FingerprintFailure>(fingerprint_message(broken, junk));
  EXPECT_EQ(failure.key, broken.key());
  EXPECT_EQ(failure.reason, "undecodable image");

  synth::Rng rng(2);
  auto png = encode_png(synth::smooth_image(rng, 40, 40));
  BlobReader good = [&](const BlobRef&) { return png; };
  auto ok = std::get<Fingerprint>(fingerprint_message(broken, good));
  EXPECT_EQ(std::get<PHash64>(ok.value), phash64(*decode_image(png)));
}
