#include "bevproj/acceptance.hpp"
