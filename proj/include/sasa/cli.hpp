#ifndef SASA_CLI_HPP
#define SASA_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "sasa/simgen.hpp"

namespace sasa::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kNumerical = 2;

// Runs one subcommand (fit, path, tune, oracle, simulate, generate, bench).
// args excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

// Published simulation table cell the bench command compares against. NaN
// marks a value the table does not report.
struct PublishedCell {
  int table = 0;
  Setting setting = Setting::s1;
  int rows = 7;
  int cols = 7;
  int ni = 10;
  std::string column;  // equal | reg_sp | reg | sp | cv
  double khat_mean;
  double khat_se;
  double per;
  double ari;
  double ari_se;
};

std::vector<PublishedCell> published_cells(int table);

struct BenchTolerance {
  double khat_mean = 0.3;
  double per = 0.15;
  double ari = 0.07;
};

}  // namespace sasa::cli

#endif  // SASA_CLI_HPP
