#pragma once
namespace bevproj {}
