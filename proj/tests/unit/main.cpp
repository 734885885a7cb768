#include <gtest/gtest.h>

#include "pc3d/nn/common.hpp"

int main(int argc, char** argv) {
  pc3d::nn::configure_torch();
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
