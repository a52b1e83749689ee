/** Wire types, exactly as the query API returns them. */

export interface SourceRef {
  doc_id: string;
  title: string;
  best_score: number;
  snippet: string;
  chunk_id: string;
  char_start: number;
  char_end: number;
  page_hint: number;
}

export interface RetrievedChunk {
  chunk_id: string;
  doc_id: string;
  score: number;
}

export interface AnswerBundle {
  question: string;
  answer: string;
  sources: SourceRef[];
  retrieved: RetrievedChunk[];
  prompt_tokens_estimate: number;
  truncation_flag: boolean;
}

export interface HighlightSpan {
  char_start: number;
  char_end: number;
}

export interface DocumentContext {
  doc_id: string;
  title: string;
  text: string;
  highlight: HighlightSpan | null;
}

export interface HealthInfo {
  status: string;
  index: {
    strategy: string;
    translated: boolean;
    embed_model: string;
    entries: number;
    dims: number;
  };
}

/** One completed exchange in the session history (append-only). */
export interface ChatTurn {
  question: string;
  answer: string;
  sources: SourceRef[];
  truncation_flag: boolean;
  timestamp: string;
}
