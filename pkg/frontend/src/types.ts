/** Wire types mirroring the assist service's JSON schemas. */

export interface Proposal {
  category_id: string;
  name: string;
  answer_template: string;
  score: number;
  rank: number;
}

export interface ClassifyResponse {
  model_version: number;
  mode: string;
  fallback_used: boolean;
  proposals: Proposal[];
}

export interface CategoryInfo {
  id: string;
  name: string;
  answer_template: string;
  active: boolean;
  doc_count: number;
  learnable: boolean;
}

export interface CategoriesResponse {
  min_docs: number;
  categories: CategoryInfo[];
}

export interface HistoryEntry {
  doc_id: string;
  received_at: string;
  text: string;
  chosen_category: string | null;
  edited_text: string | null;
  answered_at: string | null;
  elapsed_seconds: number | null;
}

export interface HistoryResponse {
  sender: string;
  entries: HistoryEntry[];
}

export interface SubmitAnswerRequest {
  doc: {
    id?: string | null;
    sender: string;
    received_at: string;
    text: string;
  };
  category: string;
  edited_text: string | null;
}

export interface Mail {
  id?: string;
  sender: string;
  received_at: string;
  text: string;
}
