#include <doctest.h>

#include "nlflow/errors.hpp"
#include "nlflow/phantom.hpp"

using namespace nlflow;

TEST_CASE("generator stream matches reference values") {
  // Reference words computed with an independent arbitrary-precision script.
  Xorshift64Star a(1);
  CHECK(a.next() == 0x4b46a55df3611b9bULL);
  CHECK(a.next() == 0xd7e1f1410e763ef4ULL);
  CHECK(a.next() == 0x5f14ec66975f9b06ULL);
  Xorshift64Star b(7);
  CHECK(b.next() == 0x14eaa7d1f828843aULL);
  CHECK(b.next() == 0x421d9d8fff2d1844ULL);
  CHECK(b.next() == 0x5aa548bbd8c601d5ULL);
  CHECK(Xorshift64Star(1).uniform() == 0.29404672187536496);
  CHECK(Xorshift64Star(7).uniform() == 0.08170555950360558);
}

TEST_CASE("uniform and normal draws") {
  Xorshift64Star g(3);
  double mean = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    mean += z;
    sq += z * z;
  }
  mean /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("phantom properties") {
  PhantomSpec spec;
  spec.seed = 11;
  const Phantom a = make_phantom(spec), b = make_phantom(spec);
  CHECK(a.image == b.image);
  CHECK(a.truth == b.truth);
  CHECK(a.image.shape() == Shape(64, 64));
  for (double v : a.image.values()) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(a.truth.count() > 0);
  CHECK(a.truth.count() < a.truth.size());

  spec.seed = 12;
  CHECK(!(make_phantom(spec).image == a.image));

  spec.noise_sigma = 0.0;
  const Phantom clean = make_phantom(spec);
  for (std::size_t k = 0; k < clean.image.size(); ++k)
    CHECK(clean.image[k] == (clean.truth[k] ? spec.foreground : spec.background));

  spec.blobs = 0;
  CHECK(make_phantom(spec).truth.count() == 0);

  PhantomSpec vol;
  vol.shape = Shape(24, 20, 8);
  vol.seed = 2;
  const Phantom v = make_phantom(vol);
  CHECK(v.image.shape() == vol.shape);
  CHECK(v.truth.count() > 0);

  PhantomSpec bad;
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(make_phantom(bad), Error);
}
