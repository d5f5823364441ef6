#include "trialsynth/cli.hpp"

int main(int argc, char** argv) { return trialsynth::cli::run(argc, argv); }
