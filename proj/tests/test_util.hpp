#pragma once

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cocoaudit/dataset.hpp"
#include "cocoaudit/raster.hpp"

namespace testutil {

using namespace cocoaudit;

inline std::string fixture(const std::string& name) {
  return std::string(COCOAUDIT_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline Ring rect_ring(double x0, double y0, double x1, double y1) {
  return {x0, y0, x1, y0, x1, y1, x0, y1};
}

// Star-shaped ring around (cx, cy): one vertex per angular sector, so the
// ring never self-intersects.
inline Ring star_ring(std::mt19937& rng, double cx, double cy, double rmin,
                      double rmax, int vertices) {
  std::uniform_real_distribution<double> jitter(0.0, 0.9);
  std::uniform_real_distribution<double> radius(rmin, rmax);
  Ring ring;
  const double step = 2 * std::numbers::pi / vertices;
  for (int i = 0; i < vertices; ++i) {
    const double a = (i + jitter(rng)) * step;
    const double r = radius(rng);
    ring.push_back(cx + r * std::cos(a));
    ring.push_back(cy + r * std::sin(a));
  }
  return ring;
}

inline BinaryMask random_mask(std::mt19937& rng, int w, int h, double density) {
  std::bernoulli_distribution on(density);
  BinaryMask m(w, h);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (on(rng)) m.set(r, c);
    }
  }
  return m;
}

inline InstanceRecord poly_instance(std::int64_t id, std::int64_t image,
                                    std::int64_t cat, std::vector<Ring> rings,
                                    bool crowd = false) {
  InstanceRecord inst;
  inst.id = id;
  inst.image_id = image;
  inst.category_id = cat;
  PolygonSet ps{std::move(rings)};
  inst.bbox = bbox_of(ps);
  inst.segmentation = std::move(ps);
  inst.iscrowd = crowd;
  return inst;
}

inline InstanceRecord box_instance(std::int64_t id, std::int64_t image,
                                   std::int64_t cat, double x, double y,
                                   double w, double h) {
  return poly_instance(id, image, cat, {rect_ring(x, y, x + w, y + h)});
}

inline InstanceRecord crowd_instance(std::int64_t id, std::int64_t image,
                                     std::int64_t cat, int img_w, int img_h,
                                     int x0, int y0, int x1, int y1) {
  BinaryMask m(img_w, img_h);
  for (int r = y0; r < y1; ++r) {
    for (int c = x0; c < x1; ++c) m.set(r, c);
  }
  InstanceRecord inst;
  inst.id = id;
  inst.image_id = image;
  inst.category_id = cat;
  inst.segmentation = encode_rle(m);
  inst.bbox = Box{double(x0), double(y0), double(x1 - x0), double(y1 - y0)};
  inst.area = double((x1 - x0) * (y1 - y0));
  inst.iscrowd = true;
  return inst;
}

inline AnnotationDataset make_dataset(std::vector<ImageRecord> images,
                                      std::vector<std::int64_t> cat_ids,
                                      std::vector<InstanceRecord> instances) {
  std::vector<CategoryRecord> cats;
  for (auto id : cat_ids) {
    CategoryRecord c;
    c.id = id;
    c.name = "c" + std::to_string(id);
    cats.push_back(c);
  }
  return AnnotationDataset(std::move(images), std::move(cats),
                           std::move(instances));
}

inline ImageRecord image(std::int64_t id, int w, int h) {
  ImageRecord img;
  img.id = id;
  img.width = w;
  img.height = h;
  img.file_name = "img" + std::to_string(id) + ".png";
  return img;
}

}  // namespace testutil
