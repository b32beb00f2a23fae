#include <stdio.h>
int main(void)
{
  int tmp;
  int a[100];
#pragma omp parallel for private(tmp)
  for (int i = 0; i < 100; i++) {
    tmp = i * 2;
    a[i] = tmp;
  }
  printf("%d\n", a[10]);
  return 0;
}
