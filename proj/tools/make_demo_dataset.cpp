// Writes the bundled demo dataset to stdout.
#include <iostream>

#include "aifml/dataset.hpp"

int main() { std::cout << aifml::write_dataset_csv(aifml::make_demo_dataset(50, 2024)); }
