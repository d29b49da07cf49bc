#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "nlflow/brats.hpp"
#include "nlflow/config.hpp"
#include "nlflow/errors.hpp"
#include "nlflow/io.hpp"
#include "support.hpp"

using namespace nlflow;
namespace fs = std::filesystem;

namespace {

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an nlflow::Error");
  return ErrorCategory::contract;
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("nlflow_io_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string bytes(std::initializer_list<int> v) {
  std::string s;
  for (int c : v) s.push_back(static_cast<char>(c));
  return s;
}

}  // namespace

TEST_CASE("pgm parsing") {
  const io::PgmImage a = io::parse_pgm("P5\n2 1\n255\n" + bytes({0, 200}));
  CHECK(a.width == 2);
  CHECK(a.height == 1);
  CHECK(a.maxval == 255);
  CHECK(a.samples == std::vector<std::int64_t>{0, 200});

  const io::PgmImage c = io::parse_pgm("P5 # comment\n3 # w\n1\n65535\n" + bytes({0x01, 0x02, 0xff, 0xff, 0, 0}));
  CHECK(c.samples == std::vector<std::int64_t>{258, 65535, 0});

  const io::PgmImage z = io::parse_pgm("P5\n4 3\n255\n" + std::string(12, '\0'));
  for (auto v : z.samples) CHECK(v == 0);

  CHECK(category_of([] { io::parse_pgm("P2\n1 1\n255\n0"); }) == ErrorCategory::format);
  CHECK(category_of([] { io::parse_pgm("P5\n2 1\n255\n" + bytes({1})); }) == ErrorCategory::format);
  CHECK(category_of([] { io::parse_pgm("P5\n1 1\n255\n" + bytes({1, 2})); }) == ErrorCategory::format);
  CHECK(category_of([] { io::parse_pgm("P5\n1 1\n0\n" + bytes({0})); }) == ErrorCategory::format);
  CHECK(category_of([] { io::parse_pgm("P5\n1 1\n100\n" + bytes({101})); }) == ErrorCategory::input_range);
  CHECK(category_of([] { io::parse_pgm(""); }) == ErrorCategory::format);
}

TEST_CASE("pgm round trips") {
  io::PgmImage img;
  img.width = 3;
  img.height = 2;
  img.maxval = 1023;
  img.samples = {0, 1, 512, 1023, 7, 300};
  const std::string enc = io::encode_pgm(img);
  CHECK(enc.rfind("P5\n3 2\n1023\n", 0) == 0);
  CHECK(enc.size() == std::string("P5\n3 2\n1023\n").size() + 12);
  const io::PgmImage back = io::parse_pgm(enc);
  CHECK(back.samples == img.samples);
  CHECK(back.maxval == 1023);

  TempDir tmp;
  const GridField f = testing::random_field(Shape(5, 7), 1);
  io::write_pgm(tmp.path / "f.pgm", f);
  const GridField g = io::read_pgm(tmp.path / "f.pgm");
  CHECK(g.shape() == f.shape());
  CHECK(testing::max_abs(f, g) <= 0.5 / 65535.0 + 1e-15);

  io::write_pgm(tmp.path / "g.pgm", g);
  CHECK(io::read_file(tmp.path / "g.pgm") == io::read_file(tmp.path / "f.pgm"));

  SegmentationMask m(Shape(2, 3), {0, 1, 1, 0, 0, 1});
  io::write_pgm_mask(tmp.path / "m.pgm", m);
  CHECK(io::read_pgm_mask(tmp.path / "m.pgm") == m);
  CHECK(io::read_file(tmp.path / "m.pgm") == "P5\n3 2\n255\n" + bytes({0, 255, 255, 0, 0, 255}));

  io::write_file(tmp.path / "bad.pgm", "P5\n2 1\n255\n" + bytes({0, 128}));
  CHECK(category_of([&] { io::read_pgm_mask(tmp.path / "bad.pgm"); }) == ErrorCategory::input_range);
  CHECK(category_of([&] { io::write_pgm(tmp.path / "x.pgm", GridField(Shape(1, 1), 1.5)); }) ==
        ErrorCategory::input_range);
  CHECK(category_of([&] { io::read_pgm(tmp.path / "missing.pgm"); }) == ErrorCategory::io);
}

TEST_CASE("rvol layout and round trips") {
  const GridField one(Shape(1, 1, 1), 0.5);
  const std::string enc = io::encode_rvol(one);
  CHECK(enc.size() == 20);
  CHECK(enc == "RVOL" + bytes({1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0x3f}));
  CHECK(io::parse_rvol(enc).shape() == Shape(1, 1));

  GridField vol = testing::random_field(Shape(3, 4, 5), 2);
  for (std::size_t k = 0; k < vol.size(); ++k) vol[k] = static_cast<float>(vol[k]);
  const GridField back = io::parse_rvol(io::encode_rvol(vol));
  CHECK(back == vol);
  CHECK(io::encode_rvol(vol).size() == 16 + 4 * 60);

  const GridField flat = io::parse_rvol(io::encode_rvol(GridField(Shape(2, 3), 0.25)));
  CHECK(flat.shape() == Shape(2, 3));

  CHECK(category_of([&] { io::parse_rvol(enc.substr(0, 19)); }) == ErrorCategory::format);
  CHECK(category_of([&] { io::parse_rvol(enc + "x"); }) == ErrorCategory::format);
  CHECK(category_of([] { io::parse_rvol("RVOX" + std::string(16, '\0')); }) == ErrorCategory::format);
  // 2.0f
  CHECK(category_of([] { io::parse_rvol("RVOL" + bytes({1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0x40})); }) ==
        ErrorCategory::input_range);

  TempDir tmp;
  SegmentationMask m(Shape(2, 2, 2), {0, 1, 0, 1, 1, 1, 0, 0});
  io::write_rvol_mask(tmp.path / "m.rvol", m);
  CHECK(io::read_rvol_mask(tmp.path / "m.rvol") == m);
  io::write_rvol(tmp.path / "h.rvol", GridField(Shape(2, 2, 2), 0.5));
  CHECK(category_of([&] { io::read_rvol_mask(tmp.path / "h.rvol"); }) == ErrorCategory::input_range);

  io::save_field(tmp.path / "v.rvol", vol);
  CHECK(io::load_field(tmp.path / "v.rvol") == vol);
  io::save_mask(tmp.path / "m2.pgm", SegmentationMask(Shape(2, 2), {1, 0, 0, 1}));
  CHECK(io::load_mask(tmp.path / "m2.pgm").count() == 2);
  CHECK_THROWS_AS(io::load_field(tmp.path / "v.txt"), Error);
}

TEST_CASE("config parsing") {
  const Config d = parse_config("");
  CHECK(d.params.p == FlowParams{}.p);
  CHECK(d.params.Q == FlowParams{}.Q);
  CHECK(d.pipeline.scheme == PipelineOptions{}.scheme);

  const Config c = parse_config(
      "[meta]\nversion = 1\n[model]\np = 1 ; comment\n[space]\nrho = 5\nwindow = square\n"
      "[yosida]\nschedule = geometric\n[pipeline]\nscheme = yosida\nmode = 3d\nauto_delta = off\n");
  CHECK(c.params.p == 1.0);
  CHECK(c.params.rho == 5.0);
  CHECK(c.params.window == WindowShape::square);
  CHECK(c.params.schedule == RSchedule::geometric);
  CHECK(c.pipeline.scheme == Scheme::yosida);
  CHECK(c.pipeline.mode == SegmentMode::volume);
  CHECK(!c.pipeline.auto_delta);

  CHECK(category_of([] { parse_config("[model]\nbogus = 1\n"); }) == ErrorCategory::parameter);
  CHECK(category_of([] { parse_config("[nowhere]\np = 1\n"); }) == ErrorCategory::parameter);
  CHECK(category_of([] { parse_config("[model]\np = abc\n"); }) == ErrorCategory::parameter);
  CHECK(category_of([] { parse_config("[meta]\nversion = 2\n"); }) == ErrorCategory::format);
  CHECK(category_of([] { parse_config("[model\np = 1\n"); }) == ErrorCategory::format);
  try {
    parse_config("[model]\ndelta = 0.5\nlambda = 1\n[pipeline]\nauto_delta = false\n");
    FAIL("expected a parameter error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::parameter);
    CHECK(std::string(e.what()).find("delta^2/alpha - lambda > 0") != std::string::npos);
  }
}

TEST_CASE("config settings and rendering") {
  Config c;
  apply_setting(c, "model.p", "2");
  apply_setting(c, "Q", "64");
  apply_setting(c, "pipeline.scheme", "explicit");
  CHECK(c.params.p == 2.0);
  CHECK(c.params.Q == 64);
  CHECK(c.pipeline.scheme == Scheme::explicit_truncated);
  CHECK(config_value(c, "Q") == "64");
  CHECK_THROWS_AS(apply_setting(c, "nope", "1"), Error);
  CHECK_THROWS_AS(apply_setting(c, "Q", "1.5"), Error);

  const std::string text = render_config(c);
  CHECK(text.rfind("[meta]\nversion = 1", 0) == 0);
  const Config back = parse_config(text);
  CHECK(render_config(back) == text);
  for (const auto& key : config_keys())
    CHECK(config_value(back, key.section + "." + key.name) == config_value(c, key.name));
  CHECK(render_config(parse_config(render_config(Config{}))) == render_config(Config{}));
}

TEST_CASE("shipped defaults file matches the built-in defaults") {
  const Config shipped = load_config(fs::path(NLFLOW_SOURCE_DIR) / "config" / "defaults.ini");
  CHECK(render_config(shipped) == render_config(Config{}));
}

TEST_CASE("brats directory reader") {
  TempDir tmp;
  CHECK(!io::BratsReader(tmp.path).next());
  CHECK_THROWS_AS(io::BratsReader(tmp.path / "absent"), Error);

  const GridField vol = testing::random_field(Shape(4, 4, 2), 3);
  GridField seg(vol.shape());
  seg[3] = 1.0;
  seg[5] = 0.5;
  io::write_rvol(tmp.path / "a_flair.rvol", vol);
  io::write_rvol(tmp.path / "a_seg.rvol", seg);
  io::write_rvol(tmp.path / "b_flair.rvol", vol);
  io::write_rvol(tmp.path / "b_seg.rvol", GridField(Shape(3, 3, 2)));
  io::write_rvol(tmp.path / "c_flair.rvol", vol);
  io::write_file(tmp.path / "d_flair.rvol", "junk");
  io::write_rvol(tmp.path / "d_seg.rvol", seg);

  io::BratsReader reader(tmp.path);
  CHECK(reader.ids() == std::vector<std::string>{"a", "b", "d"});
  const auto first = reader.next();
  REQUIRE(first);
  CHECK(first->id == "a");
  CHECK(first->truth.count() == 2);
  CHECK(testing::max_abs(first->volume, vol) <= 1e-7);
  CHECK(!reader.next());
  CHECK(reader.warnings().size() == 3);
}
