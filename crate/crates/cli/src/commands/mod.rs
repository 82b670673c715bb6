pub mod haar_check;
pub mod svm_demo;
pub mod sweep;
pub mod theory_check;
