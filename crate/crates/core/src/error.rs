use thiserror::Error;

use crate::classifier::ClassifierError;
use crate::corpus::CorpusError;
use crate::evalplan::PlanError;
use crate::extproto::ProtocolError;
use crate::langid::LangIdError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    LangId(#[from] LangIdError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
