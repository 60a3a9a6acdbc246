namespace vcf {}
