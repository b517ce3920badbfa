#include "support.hpp"

#include "metamorph/io.hpp"

#include <map>
#include <set>

using namespace mt;

TEST(Design, CanonicalCounts) {
  const Structure& s = canonical();
  EXPECT_EQ(s.cube_count(), 32);
  EXPECT_EQ(s.hinge_count(), 36);
  int level2 = 0;
  for (const auto& h : s.hinges) level2 += h.level == 2;
  EXPECT_EQ(level2, 4);
}

TEST(Design, Level1EightBlock) {
  Structure s = build_structure(level1_design(8));
  EXPECT_EQ(s.cube_count(), 8);
  EXPECT_EQ(s.hinge_count(), 8);
  std::set<std::array<int, 3>> got, want;
  for (const auto& c : reference_shape(s)) got.insert({c.x(), c.y(), c.z()});
  for (int x : {-3, -1, 1, 3})
    for (int y : {-1, 1}) want.insert({x, y, 1});
  EXPECT_EQ(got, want);
}

TEST(Design, DanglingHinge) {
  DesignSpec d = level1_design(8);
  d.hinges[3].b = 99;
  try {
    build_structure(d);
    FAIL() << "expected DanglingHinge";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DanglingHinge);
  }
}

TEST(Design, NonAdjacent) {
  DesignSpec d = level1_design(8);
  d.hinges[0].b = d.hinges[0].a == 1 ? 8 : 1;  // far corner of the block
  d.hinges[0].a = d.hinges[0].a == 1 ? 1 : 8;
  EXPECT_THROW(build_structure(d), Error);
}

TEST(Design, RejectsLoopSize) {
  EXPECT_THROW(build_structure(level1_design(5)), Error);
}

TEST(Design, FlatStateClosesForEveryAcceptedDesign) {
  for (auto d : {canonical_design(), ring8_design(), level1_design(4), level1_design(6), level1_design(8)}) {
    Structure s = build_structure(d);
    for (const auto& r : loop_residual(s, FoldState::flat(s))) EXPECT_LT(r.cwiseAbs().maxCoeff(), 1e-10) << d.name;
  }
}

TEST(Design, HingeGeometry) {
  for (const auto& h : canonical().hinges) {
    EXPECT_NEAR(h.axis.norm(), 1.0, 1e-12);
    EXPECT_GE(h.link_length, 0.0);
    // the anchor lies on the shared face between the two cubes
    Vec3 mid = (canonical().cube(h.cube_a).home + canonical().cube(h.cube_b).home).cast<double>() / 2.0;
    EXPECT_NEAR((h.anchor - mid).cwiseAbs().maxCoeff(), 1.0, 1e-12);
  }
}

TEST(DesignEnumerate, PlacementsOfFourRing) {
  EnumerateOptions opt;
  opt.vary_placements = true;
  DesignEnumerator en(level1_design(4), opt);
  EXPECT_EQ(en.total(), 256u);
  int n = 0;
  while (en.next()) ++n;
  EXPECT_EQ(n, 256);
}

TEST(DesignEnumerate, NothingVaried) {
  DesignEnumerator en(canonical_design(), EnumerateOptions{});
  auto first = en.next();
  ASSERT_TRUE(first.has_value());
  EXPECT_EQ(design_id(*first), design_id(canonical_design()));
  EXPECT_FALSE(en.next().has_value());
}

TEST(DesignEnumerate, CountLawWithFlips) {
  EnumerateOptions opt;
  opt.vary_placements = true;
  opt.vary_flips = true;
  opt.hinge_subset = {0, 1};
  DesignEnumerator en(canonical_design(), opt);
  uint64_t n = 0;
  while (en.next()) ++n;
  EXPECT_EQ(n, 16u * 16u);  // 4^2 placements x 2^4 flips
  EXPECT_EQ(en.total(), n);
}

TEST(DesignEnumerate, Deterministic) {
  EnumerateOptions opt;
  opt.vary_placements = true;
  DesignEnumerator a(level1_design(4), opt), b(level1_design(4), opt);
  for (int i = 0; i < 256; ++i) EXPECT_EQ(design_id(*a.next()), design_id(*b.next()));
}

// Two designs are equivalent when a lattice symmetry of the flat block
// maps one hinge-edge set onto the other.
TEST(DesignEnumerate, DedupeMatchesPairwiseOracle) {
  EnumerateOptions opt;
  opt.vary_placements = true;
  DesignEnumerator all(level1_design(4), opt);
  std::vector<std::set<std::array<int, 6>>> segs;
  while (auto d = all.next()) {
    std::set<std::array<int, 6>> s;
    for (const auto& e : design_segments(*d)) s.insert(e.ends);
    segs.push_back(s);
  }
  Structure s0 = build_structure(level1_design(4));
  std::vector<Vec3i> home = reference_shape(s0);
  // doubled coordinates about the block's center
  Vec3i c2 = Vec3i::Zero();
  for (const auto& h : home) c2 += h;
  auto group = lattice_group();
  std::vector<Eigen::Matrix3i> stab;
  for (const auto& g : group) {
    std::set<std::array<int, 3>> a, b;
    for (const auto& h : home) {
      Vec3i p = 2 * static_cast<int>(home.size()) * h - 2 * c2;
      a.insert({p.x(), p.y(), p.z()});
      Vec3i q = g * p;
      b.insert({q.x(), q.y(), q.z()});
    }
    if (a == b) stab.push_back(g);
  }
  ASSERT_FALSE(stab.empty());
  const int n = static_cast<int>(home.size());
  auto image = [&](const std::set<std::array<int, 6>>& s, const Eigen::Matrix3i& g) {
    std::set<std::array<int, 6>> out;
    for (const auto& e : s) {
      std::array<int, 6> r{};
      for (int k = 0; k < 2; ++k) {
        // ends are doubled; scale by n to put the block center at the origin
        Vec3i p(e[3 * k], e[3 * k + 1], e[3 * k + 2]);
        Vec3i q = g * (n * p - 2 * c2);
        r[3 * k] = q.x();
        r[3 * k + 1] = q.y();
        r[3 * k + 2] = q.z();
      }
      if (std::lexicographical_compare(r.begin() + 3, r.end(), r.begin(), r.begin() + 3))
        std::swap_ranges(r.begin(), r.begin() + 3, r.begin() + 3);
      out.insert(r);
    }
    return out;
  };
  std::vector<int> cls(segs.size(), -1);
  int classes = 0;
  for (size_t i = 0; i < segs.size(); ++i) {
    if (cls[i] >= 0) continue;
    cls[i] = classes;
    std::vector<std::set<std::array<int, 6>>> imgs;
    for (const auto& g : stab) imgs.push_back(image(segs[i], g));
    for (size_t j = i + 1; j < segs.size(); ++j) {
      if (cls[j] >= 0) continue;
      auto base = image(segs[j], Eigen::Matrix3i::Identity());
      for (const auto& im : imgs)
        if (im == base) {
          cls[j] = classes;
          break;
        }
    }
    ++classes;
  }
  opt.symmetry_dedupe = true;
  DesignEnumerator dd(level1_design(4), opt);
  int kept = 0;
  while (dd.next()) ++kept;
  EXPECT_EQ(kept, classes);
}

TEST(DesignEnumerate, NoPanicOnAnyFourRingSpec) {
  EnumerateOptions opt;
  opt.vary_placements = true;
  DesignEnumerator en(level1_design(4), opt);
  int ok = 0, typed = 0;
  while (auto d = en.next()) {
    try {
      build_structure(*d);
      ++ok;
    } catch (const Error&) {
      ++typed;
    }
  }
  EXPECT_EQ(ok + typed, 256);
  EXPECT_GT(ok, 0);
}

TEST(FlipLink, Involution) {
  DesignSpec d = canonical_design();
  for (int l = 0; l < 4; ++l) {
    DesignSpec twice = flip_link(flip_link(d, l), l);
    EXPECT_EQ(design_canonical_code(twice), design_canonical_code(d));
    for (size_t i = 0; i < d.hinges.size(); ++i) EXPECT_EQ(twice.hinges[i].surface, d.hinges[i].surface);
  }
}

TEST(FlipLink, TogglesOnlyInternalHinges) {
  DesignSpec d = canonical_design();
  DesignSpec f = flip_link(d, 0);
  Layout L = make_layout(d.motifs);
  for (size_t i = 0; i < d.hinges.size(); ++i) {
    const auto& h = d.hinges[i];
    bool internal = h.level == 1 && L.link_of[static_cast<size_t>(h.a - 1)] == 0 &&
                    L.link_of[static_cast<size_t>(h.b - 1)] == 0;
    EXPECT_EQ(f.hinges[i].surface != h.surface, internal) << "hinge " << i;
  }
}

TEST(FlipLink, CommutesAcrossLinks) {
  DesignSpec d = canonical_design();
  DesignSpec ab = flip_link(flip_link(d, 0), 2), ba = flip_link(flip_link(d, 2), 0);
  for (size_t i = 0; i < d.hinges.size(); ++i) EXPECT_EQ(ab.hinges[i].surface, ba.hinges[i].surface);
  EXPECT_EQ(ab.link_flips, ba.link_flips);
}

TEST(FlipLink, AsymmetricPlacementChangesCode) {
  DesignSpec d = level1_design(8);
  d.hinges[0].edge_code = kLeft;
  d.hinges[1].edge_code = kBottom;
  d.hinges[1].surface = 'B';
  EXPECT_NE(design_canonical_code(flip_link(d, 0)), design_canonical_code(d));
}

TEST(FlipLink, BadIndex) {
  try {
    flip_link(canonical_design(), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadIndex);
  }
}

TEST(DesignIo, JsonRoundTrip) {
  for (auto d : {canonical_design(), flip_link(ring8_design(), 0)}) {
    Json j = design_to_json(d);
    EXPECT_EQ(j["schema"], kDesignSchema);
    DesignSpec back = design_from_json(j);
    EXPECT_EQ(design_id(back), design_id(d));
    EXPECT_EQ(design_canonical_code(back), design_canonical_code(d));
  }
}

TEST(DesignIo, BuiltInNames) {
  EXPECT_EQ(build_structure(load_design("canonical")).cube_count(), 32);
  EXPECT_EQ(build_structure(load_design("ring8")).cube_count(), 8);
  EXPECT_EQ(build_structure(load_design("level1-6")).cube_count(), 6);
  EXPECT_THROW(load_design("/nonexistent/design.json"), Error);
}
