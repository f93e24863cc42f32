/** Annotation JSON schema shared with the backend, validated with zod. */

import { z } from "zod";

export const InstanceSchema = z.object({
  id: z.number().int().positive(),
  source: z.enum(["network", "edge_detector", "baseline", "human"]),
  size_class: z.enum(["small", "medium_large"]),
  rle: z.array(z.number().int().nonnegative()),
});

export const AnnotationSetSchema = z.object({
  image_id: z.string(),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  fully_labeled: z.boolean(),
  instances: z.array(InstanceSchema),
});

/** Annotation payload as served by GET /api/annotations/{id}. */
export const AnnotationDocSchema = AnnotationSetSchema.extend({
  revision: z.number().int().nonnegative(),
});

export const ImageEntrySchema = z.object({
  id: z.string(),
  split: z.string(),
  image: z.string(),
  annotation: z.string(),
});

export type InstanceJson = z.infer<typeof InstanceSchema>;
export type AnnotationSetJson = z.infer<typeof AnnotationSetSchema>;
export type AnnotationDoc = z.infer<typeof AnnotationDocSchema>;
export type ImageEntry = z.infer<typeof ImageEntrySchema>;

export type Source = InstanceJson["source"];
export type SizeClass = InstanceJson["size_class"];
