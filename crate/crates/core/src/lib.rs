pub mod deraction;
pub mod graded;
pub mod linalg;
pub mod liepair;
pub mod linfty;
pub mod mc;
pub mod scalars;
pub mod signs;
