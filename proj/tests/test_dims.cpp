#include <gtest/gtest.h>

#include "spfti/dims.hpp"
#include "spfti/errors.hpp"

using namespace spfti;

TEST(Dims, RejectsNonPowerOfTwo) {
  EXPECT_THROW(Dims(6, 4), DimensionError);
  EXPECT_THROW(Dims(8, 3), DimensionError);
  EXPECT_THROW(Dims(1, 4), DimensionError);
  EXPECT_THROW(Dims(8, 0), DimensionError);
}

TEST(Dims, Sizes) {
  const Dims d(4, 4);
  EXPECT_EQ(d.n_p(), 16u);
  EXPECT_EQ(d.n_hs(), 64u);
}

TEST(FlatIndex, WorkedExamples) {
  const Dims d(4, 4);
  EXPECT_EQ(flat_index({1, 1, 1}, d), 1u);
  EXPECT_EQ(flat_index({2, 1, 1}, d), 17u);
  // l_xi = 3, l_x = 2, l_y = 4: 16*2 + 4*3 + 2.
  EXPECT_EQ(flat_index({3, 2, 4}, d), 46u);
  EXPECT_EQ(unflatten(46, d), (Index3D{3, 2, 4}));
  EXPECT_EQ(flat_index({4, 4, 4}, d), 64u);
}

TEST(FlatIndex, OutOfRange) {
  const Dims d(4, 4);
  EXPECT_THROW(flat_index({0, 1, 1}, d), RangeError);
  EXPECT_THROW(flat_index({5, 1, 1}, d), RangeError);
  EXPECT_THROW(flat_index({1, 5, 1}, d), RangeError);
  EXPECT_THROW(unflatten(0, d), RangeError);
  EXPECT_THROW(unflatten(65, d), RangeError);
}

TEST(FlatIndex, BijectiveAndConsistentWithStorage) {
  const Dims d(8, 4);
  std::vector<bool> seen(d.n_hs(), false);
  for (std::size_t l = 1; l <= d.n_hs(); ++l) {
    const Index3D idx = unflatten(l, d);
    EXPECT_EQ(flat_index(idx, d), l);
    const std::size_t off = storage_offset(idx, d);
    EXPECT_EQ(off, storage_offset_of_flat(l, d));
    EXPECT_EQ(off, d.n_xi() * (pattern_index(idx.l_x, idx.l_y, d) - 1) + idx.l_xi - 1);
    ASSERT_LT(off, d.n_hs());
    EXPECT_FALSE(seen[off]);
    seen[off] = true;
  }
}

TEST(HSVolume, AccessAndNorm) {
  HSVolume v = HSVolume::zeros(Dims(4, 2));
  v.at(2, 3) = 3.0;
  v.at(4, 4) = 4.0;
  EXPECT_EQ(v.data()[4 * 2 + 1], 3.0);
  EXPECT_DOUBLE_EQ(v.norm(), 5.0);
  EXPECT_THROW(HSVolume(Dims(4, 2), RVector(5)), DimensionError);
}
