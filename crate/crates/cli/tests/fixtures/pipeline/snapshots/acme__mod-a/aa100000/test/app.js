function testFoo() {
  return foo(1) === 5;
}
