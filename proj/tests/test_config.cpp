#include <gtest/gtest.h>

#include <sstream>

#include "fastocc/config.hpp"

using namespace fastocc;

TEST(RunConfig, ParsesCommentsAndLaterAssignmentsWin) {
  RunConfig c({"seed", "iterations", "ls_grid", "spatial"});
  std::istringstream in(
      "# header\n"
      "seed = 7   # trailing comment\n"
      "\n"
      "iterations=100\n"
      "iterations = 250\n"
      "ls_grid = 10, 20 40\n"
      "spatial = no\n");
  c.parse(in, "run.cfg");
  EXPECT_EQ(c.get_seed("seed", 0), 7u);
  EXPECT_EQ(c.get_long("iterations", 0), 250);
  EXPECT_EQ(c.get_doubles("ls_grid"), (std::vector<double>{10, 20, 40}));
  EXPECT_FALSE(c.get_bool("spatial", true));
  EXPECT_EQ(c.get_long("missing", 3), 3);
  c.set("iterations", "9");
  EXPECT_EQ(c.get_long("iterations", 0), 9);
}

TEST(RunConfig, UnknownKeyNamesTheLine) {
  RunConfig c({"seed"});
  std::istringstream in("seed = 1\nsede = 2\n");
  try {
    c.parse(in, "run.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("run.cfg: line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("sede"), std::string::npos);
  }
}

TEST(RunConfig, TypeErrors) {
  RunConfig c({"a", "b", "c"});
  c.set("a", "ten");
  c.set("b", "maybe");
  c.set("c", "-4");
  EXPECT_THROW(c.get_double("a", 0), Error);
  EXPECT_THROW(c.get_bool("b", false), Error);
  EXPECT_THROW(c.get_seed("c", 0), Error);
  EXPECT_EQ(c.get_long("c", 0), -4);
  std::istringstream bad("no equals sign\n");
  EXPECT_THROW(c.parse(bad, "x"), Error);
  EXPECT_THROW(c.parse_file("/nonexistent/run.cfg"), Error);
}
