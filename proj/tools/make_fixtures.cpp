// Writes the synthetic MNIST- and CIFAR-format files under tests/fixtures.
//
//   make_fixtures <dir>
//
// Output is a pure function of the seeds below, so regenerating leaves the
// committed files byte-identical.

#include <filesystem>
#include <iostream>

#include "layerwise/data.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <dir>\n";
    return 2;
  }
  const std::filesystem::path root = argv[1];
  try {
    const auto mnist_train = lw::synthetic_dataset("mnist-fixture-train", 300, {1, 28, 28}, 11);
    const auto mnist_test = lw::synthetic_dataset("mnist-fixture-test", 100, {1, 28, 28}, 12);
    lw::write_mnist_idx(mnist_train, root / "mnist" / "train-images-idx3-ubyte",
                        root / "mnist" / "train-labels-idx1-ubyte");
    lw::write_mnist_idx(mnist_test, root / "mnist" / "t10k-images-idx3-ubyte", root / "mnist" / "t10k-labels-idx1-ubyte");

    const auto cifar_dir = root / "cifar10" / "cifar-10-batches-bin";
    const auto cifar_a = lw::synthetic_dataset("cifar-fixture-1", 80, {3, 32, 32}, 21);
    const auto cifar_b = lw::synthetic_dataset("cifar-fixture-2", 80, {3, 32, 32}, 22);
    const auto cifar_test = lw::synthetic_dataset("cifar-fixture-test", 40, {3, 32, 32}, 23);
    lw::write_cifar10(cifar_a, cifar_dir / "data_batch_1.bin");
    lw::write_cifar10(cifar_b, cifar_dir / "data_batch_2.bin");
    lw::write_cifar10(cifar_test, cifar_dir / "test_batch.bin");
  } catch (const std::exception& e) {
    std::cerr << "make_fixtures: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixtures written to " << root.string() << "\n";
  return 0;
}
