#include <gtest/gtest.h>

#include "gibbsprop/lattice.hpp"
#include "gibbsprop/rng.hpp"

using namespace gibbsprop;

TEST(Interior, PathGraph) {
  EXPECT_EQ(interior(Volume::interval(0, 4), Neighborhood::nearest()), Volume::interval(1, 3));
}

TEST(Interior, SingleSiteIsEmpty) { EXPECT_TRUE(interior(Volume{Site{0}}, Neighborhood::nearest()).empty()); }

TEST(Interior, TrivialNeighborhoodIsIdentity) {
  const Volume v{Site{0}, Site{3}, Site{7}};
  EXPECT_EQ(interior(v, Neighborhood::single()), v);
  const Volume sq = Volume::box(Site{0, 0}, Site{2, 3});
  EXPECT_EQ(interior(sq, Neighborhood::single(2)), sq);
}

TEST(Interior, TwoDimensionalBox) {
  const Volume sq = Volume::box(Site{0, 0}, Site{3, 3});
  EXPECT_EQ(interior(sq, Neighborhood::nearest(2)), Volume::box(Site{1, 1}, Site{2, 2}));
}

TEST(Interior, MonotoneUnderInclusion) {
  Rng rng(11, "interior");
  const auto nb = Neighborhood::nearest();
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Site> big, small;
    for (int i = -5; i <= 5; ++i)
      if (rng.uniform() < 0.7) {
        big.push_back(Site{i});
        if (rng.uniform() < 0.6) small.push_back(Site{i});
      }
    const Volume b(big), s(small);
    ASSERT_TRUE(interior(s, nb).subset_of(interior(b, nb)));
  }
}

TEST(Neighborhood, MustContainOrigin) {
  EXPECT_THROW(Neighborhood(Volume{Site{1}}), ValidationError);
  EXPECT_NO_THROW(Neighborhood(Volume{Site{-1}, Site{0}}));
}

TEST(Neighborhood, OverlapIsDifferenceSetMembership) {
  const auto nb = Neighborhood::nearest();
  EXPECT_TRUE(nb.overlaps(Site{0}, Site{2}));
  EXPECT_FALSE(nb.overlaps(Site{0}, Site{3}));
  EXPECT_TRUE(Neighborhood::single().overlaps(Site{4}, Site{4}));
  EXPECT_FALSE(Neighborhood::single().overlaps(Site{4}, Site{5}));
}

TEST(Volume, SetSemantics) {
  const Volume v{Site{3}, Site{1}, Site{3}};
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], Site{1});
  EXPECT_TRUE(v.contains(Site{3}));
  EXPECT_FALSE(v.contains(Site{2}));
  EXPECT_EQ(v.unite(Volume{Site{2}}).size(), 3u);
  EXPECT_EQ(v.minus(Volume{Site{1}}), Volume{Site{3}});
  EXPECT_THROW(Volume({Site{1}, Site{1, 2}}), ValidationError);
}

TEST(Configuration, CircleValuesAreWrapped) {
  Configuration c(Volume{Site{0}, Site{1}}, {-0.5, 7.0}, StateSpace::circle);
  EXPECT_NEAR(c.at(Site{0}), kTwoPi - 0.5, 1e-12);
  EXPECT_NEAR(c.at(Site{1}), 7.0 - kTwoPi, 1e-12);
  EXPECT_GE(wrap_circle(kTwoPi), 0.0);
  EXPECT_LT(wrap_circle(kTwoPi), kTwoPi);
}

TEST(Concat, ReadsFromTheOwningSide) {
  Configuration x(Volume{Site{0}}, {1.5});
  Configuration z(Volume{Site{1}, Site{2}}, {-1.0, 2.0});
  const auto c = concat(x, z);
  EXPECT_EQ(c.at(Site{0}), 1.5);
  EXPECT_EQ(c.at(Site{2}), 2.0);
  EXPECT_THROW(c.at(Site{5}), CoverageError);
}

TEST(Concat, EmptyLeftIsIdentity) {
  Configuration z(Volume{Site{1}, Site{2}}, {-1.0, 2.0});
  EXPECT_EQ(concat(Configuration{}, z), z);
}

TEST(Concat, OverlapIsADomainConflict) {
  Configuration x(Volume{Site{0}, Site{1}}, {1.0, 2.0});
  Configuration z(Volume{Site{1}}, {3.0});
  EXPECT_THROW(concat(x, z), DomainConflictError);
}

TEST(Concat, AssociativeAndOrderIndependent) {
  Configuration a(Volume{Site{0}}, {1.0}), b(Volume{Site{2}}, {2.0}), c(Volume{Site{5}}, {3.0});
  EXPECT_EQ(concat(concat(a, b), c), concat(a, concat(b, c)));
  EXPECT_EQ(concat(a, b), concat(b, a));
}
