// Runs every acceptance criterion at its stated tolerance and prints one
// line per criterion; exits nonzero if any fails.

#include "pdlp/verify.hpp"

#include <iostream>

int main()
{
    int failed = 0;
    int total = 0;
    for (int id = 1; id <= 13; ++id) {
        const auto r = pdlp::verify::run_criterion(id);
        std::cout << pdlp::verify::format_line(r) << std::endl;
        failed += !r.passed;
        ++total;
    }
    std::cout << (total - failed) << "/" << total << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
