#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "inim/core.hpp"

using namespace inim;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(ValidateDataset, NormalizesToUnitSquare) {
  const ScatterDataset ds = validate_dataset({{0, 0}, {2, 4}});
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples[0], (Point2{0, 0}));
  EXPECT_EQ(ds.samples[1], (Point2{1, 1}));
}

TEST(ValidateDataset, DegenerateAxisMapsToHalf) {
  const ScatterDataset ds = validate_dataset({{0.5, 0.5}});
  EXPECT_EQ(ds.samples[0], (Point2{0.5, 0.5}));
  const ScatterDataset line = validate_dataset({{3, 1}, {5, 1}});
  EXPECT_EQ(line.samples[0], (Point2{0, 0.5}));
  EXPECT_EQ(line.samples[1], (Point2{1, 0.5}));
}

TEST(ValidateDataset, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(code_of([&] { validate_dataset({{0.1, nan}}); }), ErrorCode::NonFiniteCoordinate);
  EXPECT_EQ(code_of([&] { validate_dataset({{std::numeric_limits<double>::infinity(), 0.2}}); }),
            ErrorCode::NonFiniteCoordinate);
}

TEST(ValidateDataset, LabelLengthAndEmpty) {
  EXPECT_EQ(code_of([] { validate_dataset({{0.1, 0.2}, {0.3, 0.4}}, {1}); }), ErrorCode::LabelLengthMismatch);
  EXPECT_EQ(code_of([] { validate_dataset({}); }), ErrorCode::EmptyInput);
  ValidateOptions opts;
  opts.allow_empty = true;
  EXPECT_EQ(validate_dataset({}, {}, opts).size(), 0u);
}

TEST(ValidateDataset, OnlyIfOutOfRangeKeepsUnitData) {
  ValidateOptions opts;
  opts.only_if_out_of_range = true;
  const ScatterDataset ds = validate_dataset({{0.2, 0.3}, {0.4, 0.9}}, {}, opts);
  EXPECT_EQ(ds.samples[0], (Point2{0.2, 0.3}));
  EXPECT_EQ(ds.samples[1], (Point2{0.4, 0.9}));
}

TEST(ValidateDataset, WithoutNormalizationRejectsOutside) {
  ValidateOptions opts;
  opts.auto_normalize = false;
  EXPECT_NO_THROW(validate_dataset({{0, 1}}, {}, opts));
  EXPECT_THROW(validate_dataset({{1.5, 0.5}}, {}, opts), Error);
}

TEST(PixelOf, Examples) {
  EXPECT_EQ(pixel_of(0, 0, 3), (PixelIndex{0, 0}));
  EXPECT_EQ(pixel_of(1, 1, 3), (PixelIndex{7, 7}));
  EXPECT_EQ(pixel_of(0.5, 0.25, 3), (PixelIndex{4, 2}));
}

TEST(PixelOf, RoundTripsPixelCoordinates) {
  for (int k : {2, 5, 10}) {
    for (int i = 0; i < side_of(k); i += std::max(1, side_of(k) / 16)) {
      const PixelIndex p{i, side_of(k) - 1 - i};
      EXPECT_EQ(pixel_of(coord_of(p, k), k), p);
    }
  }
}

TEST(TextureGrid, RowMajorLayout) {
  TextureGrid t(2, 1.5);
  EXPECT_EQ(t.side(), 4);
  EXPECT_EQ(t.pixel_count(), 16u);
  t(3, 1) = 7.0;
  EXPECT_EQ(t.values()[1 * 4 + 3], 7.0);
  EXPECT_DOUBLE_EQ(t.sum(), 15 * 1.5 + 7.0);
  EXPECT_EQ(t.max(), 7.0);
  EXPECT_EQ(t.min(), 1.5);
}

TEST(DeformationField, IdentityTargetsPixelCoordinates) {
  const DeformationField f = DeformationField::identity(3);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < 8; ++i) EXPECT_EQ(f.at(i, j), coord_of({i, j}, 3));
  }
}

TEST(Params, ValidateRejectsBadValues) {
  RegularizationParams p;
  EXPECT_NO_THROW(p.validate());
  p.iterations = -1;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.r = 0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.d0_mode = BackgroundMode::Explicit;
  p.d0 = 0.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Params, StopCriterionNames) {
  for (StopCriterion s : {StopCriterion::FixedCount, StopCriterion::DisplacementBelowEpsilon,
                          StopCriterion::TimeBudget}) {
    EXPECT_EQ(parse_stop_criterion(to_string(s)), s);
  }
  EXPECT_FALSE(parse_stop_criterion("sometimes").has_value());
}
