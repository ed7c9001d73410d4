// Writes Maxwell-Boltzmann (a = 1, three dimensions) residual norms, one per line.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: mb_samples OUT COUNT\n");
    return 2;
  }
  std::FILE* f = std::fopen(argv[1], "w");
  if (!f) return 1;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  const long count = std::atol(argv[2]);
  for (long i = 0; i < count; ++i) {
    const double x = normal(rng), y = normal(rng), z = normal(rng);
    std::fprintf(f, "%.17g\n", std::sqrt(x * x + y * y + z * z));
  }
  return std::fclose(f) == 0 ? 0 : 1;
}
