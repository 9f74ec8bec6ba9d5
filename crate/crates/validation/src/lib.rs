//! Holds the `acceptance` test target; the criteria themselves live in
//! `levelcross::acceptance`.
