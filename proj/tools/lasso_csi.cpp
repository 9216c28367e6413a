// lasso-csi: theory and Monte Carlo lambda sweeps as CSV.
//
// Exit status: 0 success, 1 usage error, 2 computation error, 3 I/O error.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lassocsi/sweep.hpp"

int main(int argc, char** argv) {
  using namespace lassocsi;
  SweepSpec spec;
  try {
    spec = parse_args(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const UsageError& e) {
    if (std::string(e.what()).empty()) {
      std::cout << e.help;
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n\n" << e.help;
    return 1;
  }

  std::vector<SweepRow> rows;
  try {
    rows = run_sweep(spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (spec.out.empty()) {
      emit_csv(rows, std::cout);
    } else {
      std::ofstream f(spec.out, std::ios::binary);
      if (!f) throw CsvIoError("cannot open " + spec.out);
      emit_csv(rows, f, spec.out);
    }
  } catch (const CsvIoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
