pub mod adler;
pub mod diosi;
pub mod hypergeometric;
pub mod karolyhazy;
pub mod td;
