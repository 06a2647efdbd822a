//! Holds the `acceptance` test target, which reproduces the headline
//! results end to end and prints one PASS/FAIL line per criterion. It lives
//! in its own package so that it runs after every other suite.
