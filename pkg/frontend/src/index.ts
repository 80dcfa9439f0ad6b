export * from './format.js'
export * from './spec.js'
export * from './model.js'
export * from './visual.js'
export * from './semantics.js'
export * from './gradcam.js'
