#include <cstdio>
int main(){std::puts("nsmt");return 0;}
