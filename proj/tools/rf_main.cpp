#include <cstdio>
int main() { std::puts("rfields: placeholder"); return 0; }
