/**
 * Thin client for the annotation service HTTP API. The UI mutates server
 * state only through saveAnnotation (PUT); everything else is read-only.
 */

import {
  AnnotationDoc,
  AnnotationDocSchema,
  AnnotationSetJson,
  ImageEntry,
  ImageEntrySchema,
} from "./types";

export class ApiError extends Error {
  constructor(message: string, public readonly status: number) {
    super(message);
    this.name = "ApiError";
  }
}

/** A PUT based on a stale revision; reload and reapply to resolve. */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(message, 409);
    this.name = "ConflictError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  private async checkJson(resp: Response): Promise<unknown> {
    if (resp.status === 409) {
      throw new ConflictError(await describeError(resp));
    }
    if (!resp.ok) {
      throw new ApiError(await describeError(resp), resp.status);
    }
    return resp.json();
  }

  async health(): Promise<{ status: string; images: number }> {
    const resp = await this.fetchImpl(this.url("/api/health"));
    return (await this.checkJson(resp)) as { status: string; images: number };
  }

  async listImages(): Promise<ImageEntry[]> {
    const resp = await this.fetchImpl(this.url("/api/images"));
    const body = await this.checkJson(resp);
    return ImageEntrySchema.array().parse(body);
  }

  async imageBytes(imageId: string): Promise<ArrayBuffer> {
    const resp = await this.fetchImpl(this.url(`/api/images/${imageId}`));
    if (!resp.ok) throw new ApiError(await describeError(resp), resp.status);
    return resp.arrayBuffer();
  }

  async getAnnotation(imageId: string): Promise<AnnotationDoc> {
    const resp = await this.fetchImpl(this.url(`/api/annotations/${imageId}`));
    return AnnotationDocSchema.parse(await this.checkJson(resp));
  }

  /** Optimistic save: `revision` is the revision the edit was based on. */
  async saveAnnotation(
    imageId: string,
    annotation: AnnotationSetJson,
    revision: number,
  ): Promise<AnnotationDoc> {
    const resp = await this.fetchImpl(this.url(`/api/annotations/${imageId}`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ...annotation, revision }),
    });
    return AnnotationDocSchema.parse(await this.checkJson(resp));
  }

  async segment(
    imageId: string,
    overrides: Record<string, unknown> = {},
  ): Promise<AnnotationSetJson> {
    const resp = await this.fetchImpl(this.url(`/api/segment/${imageId}`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(overrides),
    });
    return (await this.checkJson(resp)) as AnnotationSetJson;
  }
}

async function describeError(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string; error?: string };
    return body.detail ?? body.error ?? `HTTP ${resp.status}`;
  } catch {
    return `HTTP ${resp.status}`;
  }
}
