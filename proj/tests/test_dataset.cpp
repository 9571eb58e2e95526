#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cocoaudit/dataset.hpp"
#include "cocoaudit/errors.hpp"
#include "test_util.hpp"

using namespace cocoaudit;
using testutil::fixture;
using testutil::slurp;

namespace {

const char* kMinimal = R"({
  "images": [{"id": 1, "width": 10, "height": 10, "file_name": "a.png"}],
  "categories": [{"id": 1, "name": "thing"}],
  "annotations": []
})";

Json tiny_json() { return Json::parse(slurp(fixture("tiny_pair_a.json"))); }

}  // namespace

TEST(ParseDataset, MinimalFileHasEmptyIndexEntry) {
  const auto ds = parse_dataset(kMinimal);
  ASSERT_EQ(ds.images().size(), 1u);
  ASSERT_EQ(ds.index().size(), 1u);
  EXPECT_TRUE(ds.index().at(1).empty());
  EXPECT_TRUE(ds.instances_of(1).empty());
}

TEST(ParseDataset, TinyFixturePartition) {
  const auto ds = load_dataset(fixture("tiny_pair_a.json"));
  EXPECT_EQ(ds.instances().size(), 5u);
  EXPECT_EQ(ds.instances_of(1).size(), 2u);
  EXPECT_EQ(ds.instances_of(2).size(), 2u);
  EXPECT_EQ(ds.instances_of(3).size(), 1u);
  EXPECT_EQ(ds.categories().size(), 2u);
}

TEST(ParseDataset, DanglingImageReference) {
  Json j = Json::parse(kMinimal);
  j["annotations"].push_back({{"id", 7},
                              {"image_id", 99},
                              {"category_id", 1},
                              {"segmentation", {{0, 0, 4, 0, 4, 4}}},
                              {"bbox", {0, 0, 4, 4}},
                              {"iscrowd", 0}});
  try {
    parse_dataset(j.dump());
    FAIL() << "expected IntegrityError";
  } catch (const IntegrityError& e) {
    EXPECT_NE(std::string(e.what()).find("annotation 7 → image 99"),
              std::string::npos)
        << e.what();
  }
}

TEST(ParseDataset, MalformedJsonReportsByteOffset) {
  try {
    parse_dataset(R"({"images": [1, 2,, 3]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.byte_offset(), 18u);
  }
}

TEST(ParseDataset, MissingFieldNamesRecordAndField) {
  Json j = tiny_json();
  j["annotations"][2].erase("bbox");
  try {
    parse_dataset(j.dump());
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("annotation 3"), std::string::npos) << what;
    EXPECT_NE(what.find("bbox"), std::string::npos) << what;
  }
}

TEST(ParseDataset, MissingTopLevelKey) {
  EXPECT_THROW(parse_dataset(R"({"images": [], "categories": []})"),
               SchemaError);
  EXPECT_THROW(parse_dataset("[]"), SchemaError);
}

TEST(ParseDataset, OddCoordinateCountRejected) {
  Json j = tiny_json();
  j["annotations"][0]["segmentation"] = {{1, 1, 5, 1, 5}};
  EXPECT_THROW(parse_dataset(j.dump()), SchemaError);
}

TEST(ParseDataset, RleCountSumMustMatch) {
  Json j = tiny_json();
  j["annotations"][0]["segmentation"] = {{"counts", {1, 2}}, {"size", {2, 2}}};
  EXPECT_THROW(parse_dataset(j.dump()), SchemaError);
}

TEST(ParseDataset, CompressedRleString) {
  Json j = tiny_json();
  j["annotations"][0]["segmentation"] = {
      {"counts", rle_counts_to_string(std::vector<std::uint32_t>{100, 3900, 96})},
      {"size", {64, 64}}};
  const auto ds = parse_dataset(j.dump());
  const auto& rle = std::get<RunLengthMask>(ds.find_instance(1)->segmentation);
  EXPECT_EQ(rle.counts, (std::vector<std::uint32_t>{100, 3900, 96}));
}

TEST(ParseDataset, DuplicateIdRejectedOrDeferred) {
  Json j = tiny_json();
  j["annotations"][1]["id"] = 1;
  EXPECT_THROW(parse_dataset(j.dump()), IntegrityError);

  ParseOptions lax;
  lax.check_integrity = false;
  const auto ds = parse_dataset(j.dump(), lax);
  const auto issues = validate(ds);
  EXPECT_TRUE(std::any_of(issues.begin(), issues.end(), [](const Issue& i) {
    return i.kind == IssueKind::kDuplicateId && i.record_id == 1;
  }));
}

TEST(ParseDataset, OrderIndependent) {
  Json j = tiny_json();
  const auto reference = parse_dataset(j.dump());
  std::mt19937 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    for (const char* key : {"images", "annotations", "categories"}) {
      auto& arr = j[key];
      std::vector<Json> items(arr.begin(), arr.end());
      std::shuffle(items.begin(), items.end(), rng);
      arr = items;
    }
    EXPECT_EQ(parse_dataset(j.dump()), reference);
  }
}

TEST(ParseDataset, DeterministicAndRoundTrips) {
  const std::string bytes = slurp(fixture("tiny_pair_a.json"));
  const auto a = parse_dataset(bytes);
  const auto b = parse_dataset(bytes);
  EXPECT_EQ(a, b);
  EXPECT_EQ(parse_dataset(serialize_dataset(a)), a);
}

TEST(ParseDataset, UnknownFieldsPreserved) {
  Json j = tiny_json();
  j["licenses"] = Json::array({{{"id", 1}, {"name", "cc"}}});
  j["images"][0]["coco_url"] = "http://example.invalid/1.jpg";
  j["annotations"][0]["attributes"] = {{"occluded", true}};
  const auto ds = parse_dataset(j.dump());
  EXPECT_EQ(ds.extra().at("licenses")[0]["name"], "cc");
  EXPECT_EQ(ds.find_image(1)->extra.at("coco_url"), "http://example.invalid/1.jpg");
  const Json back = Json::parse(serialize_dataset(ds));
  EXPECT_EQ(back["licenses"], j["licenses"]);
  EXPECT_EQ(back["annotations"][0]["attributes"]["occluded"], true);
}

TEST(ParseDataset, IscrowdAcceptsBoolAndInt) {
  Json j = tiny_json();
  j["annotations"][0]["iscrowd"] = true;
  j["annotations"][1]["iscrowd"] = 0;
  const auto ds = parse_dataset(j.dump());
  EXPECT_TRUE(ds.find_instance(1)->iscrowd);
  EXPECT_FALSE(ds.find_instance(2)->iscrowd);
}

TEST(ParseDataset, ImageWithZeroWidthRejected) {
  Json j = Json::parse(kMinimal);
  j["images"][0]["width"] = 0;
  EXPECT_THROW(parse_dataset(j.dump()), SchemaError);
}

TEST(SinglePolygonView, FiltersCrowdAndMultiRing) {
  using namespace testutil;
  auto ds = make_dataset(
      {image(1, 64, 64)}, {1},
      {box_instance(1, 1, 1, 0, 0, 5, 5), box_instance(2, 1, 1, 10, 0, 5, 5),
       box_instance(3, 1, 1, 20, 0, 5, 5),
       poly_instance(4, 1, 1, {rect_ring(0, 10, 4, 14), rect_ring(6, 10, 9, 14)}),
       crowd_instance(5, 1, 1, 64, 64, 30, 30, 40, 40)});
  const auto view = single_polygon_view(ds);
  ASSERT_EQ(view.size(), 3u);
  EXPECT_EQ(view[0]->id, 1);
  EXPECT_EQ(view[2]->id, 3);
}

TEST(SinglePolygonView, AllCrowdIsEmpty) {
  using namespace testutil;
  auto ds = make_dataset({image(1, 32, 32)}, {1},
                         {crowd_instance(1, 1, 1, 32, 32, 0, 0, 4, 4),
                          crowd_instance(2, 1, 1, 32, 32, 8, 8, 12, 12)});
  EXPECT_TRUE(single_polygon_view(ds).empty());
}

TEST(SinglePolygonView, IdentityWhenAlreadyClean) {
  const auto ds = load_dataset(fixture("tiny_pair_a.json"));
  const auto view = single_polygon_view(ds);
  ASSERT_EQ(view.size(), ds.instances().size());
  for (std::size_t i = 0; i < view.size(); ++i) {
    EXPECT_EQ(view[i], &ds.instances()[i]);
  }
}

TEST(Validate, CleanFixtureHasNoIssues) {
  const auto ds = load_dataset(fixture("tiny_pair_a.json"));
  const auto issues = validate(ds);
  for (const auto& i : issues) ADD_FAILURE() << to_string(i.kind) << " " << i.detail;
}

TEST(Validate, TwoVertexPolygon) {
  Json j = tiny_json();
  j["annotations"][3]["segmentation"] = {{1, 1, 5, 5}};
  const auto issues = validate(parse_dataset(j.dump()));
  ASSERT_FALSE(issues.empty());
  EXPECT_TRUE(std::any_of(issues.begin(), issues.end(), [](const Issue& i) {
    return i.kind == IssueKind::kDegeneratePolygon && i.record_id == 4;
  }));
}

TEST(Validate, AreaMismatchAgainstRaster) {
  using namespace testutil;
  auto inst = box_instance(1, 1, 1, 0, 0, 10, 10);  // 100 pixels
  inst.area = 50.0;
  auto ds = make_dataset({image(1, 20, 20)}, {1}, {inst});
  const auto issues = validate(ds);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].kind, IssueKind::kAreaMismatch);

  inst.area = 95.0;  // within 10 %
  EXPECT_TRUE(validate(make_dataset({image(1, 20, 20)}, {1}, {inst})).empty());
}

TEST(Validate, BoxOutsideImageAndCrowdShape) {
  using namespace testutil;
  auto outside = box_instance(1, 1, 1, 15, 15, 10, 10);
  auto crowd_poly = box_instance(2, 1, 1, 0, 0, 4, 4);
  crowd_poly.iscrowd = true;
  auto ds = make_dataset({image(1, 20, 20)}, {1}, {outside, crowd_poly});
  ValidateOptions opts;
  opts.check_area = false;
  const auto issues = validate(ds, opts);
  ASSERT_EQ(issues.size(), 2u);
  EXPECT_EQ(issues[0].kind, IssueKind::kBboxOutsideImage);
  EXPECT_EQ(issues[1].kind, IssueKind::kCrowdShapeMismatch);
}
