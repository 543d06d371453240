#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "xtc/attr_schema.hpp"
#include "xtc/error.hpp"
#include "xtc/raster.hpp"

using namespace xtc;
using namespace xtc::testing;

namespace {

// direct per-pixel window averages, horizontal then vertical, same rounding
RgbImage naive_blur(const RgbImage& img, int r) {
  auto pass = [r](const RgbImage& src, bool horiz) {
    RgbImage dst(src.width(), src.height());
    const int w = 2 * r + 1;
    for (int y = 0; y < src.height(); ++y)
      for (int x = 0; x < src.width(); ++x)
        for (int c = 0; c < 3; ++c) {
          int s = 0;
          for (int d = -r; d <= r; ++d) {
            const int sx = horiz ? std::clamp(x + d, 0, src.width() - 1) : x;
            const int sy = horiz ? y : std::clamp(y + d, 0, src.height() - 1);
            s += src.at(sx, sy)[c];
          }
          dst.at(x, y)[c] = static_cast<std::uint8_t>((s + w / 2) / w);
        }
    return dst;
  };
  return pass(pass(img, true), false);
}

}  // namespace

TEST(MetaClassSchema, ShippedFileEqualsBuiltin) {
  const auto shipped = load_metaclass_schema((schemas_dir() / "metaclasses-v1.json").string());
  EXPECT_EQ(shipped, default_metaclass_schema());
  EXPECT_EQ(to_json(shipped).dump(), to_json(default_metaclass_schema()).dump());
}

TEST(MetaClassSchema, BuiltinTable) {
  const auto& s = default_metaclass_schema();
  EXPECT_EQ(s.meta_classes().size(), 30u);
  EXPECT_EQ(keys_for("person", s), (std::vector<std::string>{"upper clothing type/color", "lower clothing type/color",
                                                             "held object type", "headwear/eyewear"}));
  EXPECT_EQ(keys_for("dining table", s), (std::vector<std::string>{"primary color", "material type"}));
  EXPECT_EQ(s.meta_class_for("car")->name, "vehicle");
  EXPECT_TRUE(keys_for("unicorn", s).empty());
}

TEST(MetaClassSchema, RejectsBadDocuments) {
  EXPECT_THROW(metaclass_schema_from_json(nlohmann::json::object()), SchemaError);
  EXPECT_THROW(metaclass_schema_from_json(nlohmann::json::parse(
                   R"({"meta_classes":[{"name":"a","labels":["x"],"keys":["k"]},{"name":"b","labels":["x"],"keys":["k"]}]})")),
               InvariantError);
  EXPECT_THROW(metaclass_schema_from_json(nlohmann::json::parse(R"({"meta_classes":[{"name":"a","labels":[],"keys":[]}]})")),
               InvariantError);
  EXPECT_THROW(load_metaclass_schema("/nonexistent/schema.json"), InputError);
}

TEST(ViewSpec, GeometryAndClamping) {
  const ViewSpec v = make_view_spec(BBox{10, 20, 100, 50}, 640, 480);
  EXPECT_EQ(v.target, (PixelRect{10, 20, 100, 50}));
  EXPECT_EQ(v.crop, (PixelRect{0, 10, 120, 70}));  // margin 10, clamped at x = 0
  EXPECT_EQ(v.blur_radius, 13);                    // 2% of 640, rounded
  EXPECT_EQ(v.background, 128);
  const ViewSpec edge = make_view_spec(BBox{600, 440, 40, 40}, 640, 480);
  EXPECT_EQ(edge.crop, (PixelRect{596, 436, 44, 44}));
}

TEST(AttributeRequest, PersonPromptIsDeterministic) {
  const Node p = node("p1", "person", {}, BBox{0, 0, 10, 10});
  const auto a = build_attribute_request(p, "img:1", 100, 100, default_metaclass_schema());
  const auto b = build_attribute_request(p, "img:1", 100, 100, default_metaclass_schema());
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_EQ(a.keys.size(), 4u);
  EXPECT_NE(a.prompt.find("upper clothing type/color, lower clothing type/color, held object type, headwear/eyewear"),
            std::string::npos);
  EXPECT_THROW(build_attribute_request(node("p", "person"), "i", 10, 10, default_metaclass_schema()), InputError);
  EXPECT_THROW(build_attribute_request(node("u", "unicorn", {}, BBox{0, 0, 1, 1}), "i", 10, 10, default_metaclass_schema()),
               InputError);
}

TEST(AttributeResponse, ParseAndNormalize) {
  const auto r = parse_attribute_response("Reasoning: it looks red.\n{\"primary color\": \" Red \", \"mood\": \"happy\"}",
                                          {"primary color"});
  EXPECT_EQ(r.values, (std::map<std::string, std::string>{{"primary color", "red"}}));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("mood"), std::string::npos);
  EXPECT_THROW(parse_attribute_response("no json here", {"primary color"}), ParseError);
  EXPECT_THROW(parse_attribute_response("[1, 2]", {"primary color"}), ParseError);
}

TEST(Raster, BlurMatchesDirectWindowSums) {
  std::mt19937 rng(3);
  RgbImage img(13, 9);
  for (auto& b : img.data()) b = static_cast<std::uint8_t>(rng() % 256);
  for (int r : {1, 2, 5}) EXPECT_EQ(box_blur(img, r), naive_blur(img, r)) << r;
  const RgbImage flat(8, 8, 77);
  EXPECT_EQ(box_blur(flat, 3), flat);
}

TEST(Raster, ViewsAndPpm) {
  RgbImage img(30, 30, 200);
  const ViewSpec v = make_view_spec(BBox{5, 5, 10, 10}, 30, 30);
  ASSERT_EQ(v.crop.x, 4);  // one pixel of margin
  const RgbImage crop = render_detail_crop(img, v);
  EXPECT_EQ(crop.width(), v.crop.w);
  EXPECT_EQ(crop.at(0, 0)[0], kNeutralGray);
  EXPECT_EQ(crop.at(v.target.x - v.crop.x, v.target.y - v.crop.y)[0], 200);
  const RgbImage spot = render_spotlight(img, v);
  EXPECT_EQ(spot.at(5, 5)[0], 255);
  EXPECT_EQ(spot.at(5, 5)[1], 0);

  TempDir dir;
  write_ppm(img, (dir / "a.ppm").string());
  EXPECT_EQ(read_ppm((dir / "a.ppm").string()), img);
  EXPECT_EQ(encode_ppm(RgbImage(1, 1, 9)), std::string("P6\n1 1\n255\n\x09\x09\x09", 14));
}
